#include "cli.hpp"

int main(int argc, char** argv) { return dfsq::cli::run(argc, argv); }
