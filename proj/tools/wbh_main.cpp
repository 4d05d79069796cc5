#include <iostream>
#include <string>
#include <vector>

#include "wbh/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return wbh::cli::main(args, std::cout, std::cerr);
}
