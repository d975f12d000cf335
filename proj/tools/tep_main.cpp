#include <string>
#include <vector>

#include "tep/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tep::cli::run(args);
}
