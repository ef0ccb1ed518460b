// Command-line harness; subcommands are filled in alongside the library.
#include <cstdio>

int main() {
    std::puts("ctlearn: no subcommands wired up yet");
    return 1;
}
