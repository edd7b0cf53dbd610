#include <iostream>

#include "dosepool/cli/app.hpp"

int main(int argc, char** argv) { return dosepool::cli::run(argc, argv, std::cout, std::cerr); }
