#include <string>
#include <vector>

#include "mfm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mfm::dispatch(args);
}
