#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tick/cli.hpp"

int main(int argc, char** argv) {
  // Standard output carries run ids only; diagnostics go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("tick"));
  return tick::run_cli(argc, argv, std::cout, std::cerr);
}
