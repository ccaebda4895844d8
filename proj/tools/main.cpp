#include <atomic>
#include <csignal>
#include <iostream>

#include "cli.hpp"

namespace {
std::atomic<bool> g_interrupt{false};
}

int main(int argc, char** argv)
{
    std::signal(SIGINT, [](int) { g_interrupt.store(true); });
    return smla::cli::run(argc, argv, std::cout, std::cerr, &g_interrupt);
}
