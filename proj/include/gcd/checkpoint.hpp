#pragma once

#include <filesystem>

#include "gcd/head.hpp"
#include "gcd/trainer.hpp"

namespace gcd {

// Trained model state. On disk: "GCDH", u32 version, u32 spec length, the
// train spec as key=value text, u64 dims (D, H, D', K), then float64
// little-endian arrays W1, b1, W2, b2, C (matrices row-major).
struct Checkpoint {
  TrainSpec spec;
  ProjectionHead head;
  PrototypeBank prototypes;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gcd
