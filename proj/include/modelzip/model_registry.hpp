#pragma once

#include "modelzip/model.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace modelzip {

// Builds an in-process model from a spec string:
//   uniform | uniform:V
//   adaptive[:order[:delta[:V]]]   (Laplace by default)
//   kt[:order]                     (adaptive with delta = 0.5)
//   ngram:ORDER:TRAINING_FILE[:delta] | ngram:DUMP.mzng
//   deflate-predictor
std::unique_ptr<Model> make_model(std::string_view spec);

}  // namespace modelzip
