#include "qb/cli.hpp"

int main(int argc, char** argv) { return qb::cli::run(argc, argv); }
