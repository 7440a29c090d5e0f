// Regenerates the bundled fixture files: make_fixtures OUTDIR

#include <iostream>

#include "selftest.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures OUTDIR\n";
    return 2;
  }
  namespace io = selftest::io;
  const std::string dir = argv[1];
  io::write_text(dir + "/chsh.json", io::encode(selftest::lab::canonical_chsh()).dump(2) + "\n");
  io::write_text(dir + "/trine.json", io::encode(selftest::lab::trine_strategy()).dump(2) + "\n");
  io::write_text(dir + "/trine_minimal_naimark.json", io::encode(selftest::lab::moment_strategy(1)).dump(2) + "\n");
  io::write_text(dir + "/chsh_game.json", io::encode(selftest::lab::chsh_game()).dump(2) + "\n");
  return 0;
}
