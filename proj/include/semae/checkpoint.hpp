#pragma once

#include <filesystem>
#include <iosfwd>

#include "semae/model.hpp"

namespace semae {

// Plain-text checkpoint. Layout:
//
//   semae-checkpoint 1
//   H <int>
//   K <int>
//   d <int>
//   kernel <dot_softmax|neg_sqdist_softmax>
//   config <key> <value>          (one line per TrainConfig field)
//   tensor <name> <rows> <cols>   followed by `rows` lines of `cols` values
//   end
//
// Tensors appear in the order W, b, ln_gain, ln_bias, D; vectors are 1 x n.
// Values are printed with 17 significant digits, so a write/read cycle is
// bit-exact.
void write_checkpoint(const SemaeModel& model, std::ostream& out);
SemaeModel read_checkpoint(std::istream& in);

void save_checkpoint(const SemaeModel& model, const std::filesystem::path& path);
SemaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace semae
