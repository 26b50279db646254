#include <iostream>

#include "hypertab/cli.hpp"

int main(int argc, char** argv) { return hypertab::cli::run(argc, argv, std::cout, std::cerr); }
