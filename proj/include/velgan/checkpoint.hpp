#pragma once

#include <string>

#include "velgan/train.hpp"

namespace velgan {

// Single-file container: one line of magic, the decimal byte length of a
// JSON header, the header itself, then raw little-endian float32 tensor data
// at the offsets the header lists. Holds both network specs, loss/optim
// configs, preprocessing statistics, the RNG seed, epoch counter, loss
// history, parameters and Adam moments - everything needed to resume
// training or run inference, readable without this library.
void save_checkpoint(TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace velgan
