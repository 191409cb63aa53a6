#include <iostream>

#include "orbex/cli.hpp"

int main(int argc, char** argv)
{
    return orbex::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
