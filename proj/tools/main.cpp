#include "cavity/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return cavity::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
