#include "synth/cli.hpp"

int main(int argc, char** argv) {
    return synth::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
