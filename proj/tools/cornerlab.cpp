#include <iostream>

#include "cornerlab/cli.hpp"

int main(int argc, char** argv) { return cornerlab::cli::main(argc, argv, std::cout, std::cerr); }
