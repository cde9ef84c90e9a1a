// Writes a synthetic OLMF feature file with a planted object rectangle and
// prints the rectangle's grid cells, e.g.
//
//   make_planted scene.olmf 7
//   olm localize --features scene.olmf --alpha 0.05 --size 448x448

#include <cstdlib>
#include <iostream>
#include <vector>

#include "olm/tensor_store.hpp"
#include "planted.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argv[1][0] == '-') {
    std::cerr << "usage: make_planted <out.olmf> [seed]\n";
    return 2;
  }
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;
  const auto scene = olm::synthetic::make_planted_scene(seed);
  const std::vector<olm::FeatureStack> stacks{scene.stack};
  olm::write_olmf(stacks, argv[1]);
  std::cout << "planted rows " << scene.row0 << ".." << scene.row1 << ", cols " << scene.col0
            << ".." << scene.col1 << " on a " << scene.stack.height() << "x"
            << scene.stack.width() << " grid\n";
  return 0;
}
