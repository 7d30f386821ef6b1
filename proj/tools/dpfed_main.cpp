#include <iostream>

#include "dpfed/cli.hpp"

int main(int argc, char** argv) { return dpfed::cli::run(argc, argv, std::cout, std::cerr); }
