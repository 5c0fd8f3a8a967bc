#include "actrack/cli.hpp"

int main(int argc, char** argv) {
    return actrack::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
