#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "earlyrisk/config.hpp"
#include "earlyrisk/eval.hpp"

namespace earlyrisk {

/// The eleven classifiers in report order.
const std::vector<std::string>& model_names();

bool is_known_model(const std::string& name);

/// Seed stream of a model; fixed per name so that enabling a subset does not
/// change any model's results.
std::uint64_t model_stream(const std::string& name);

/// Fits `name` with the configured hyperparameters; the factory's seed replaces the
/// configured one.
eval::ModelFactory make_factory(const std::string& name, const ModelSettings& settings);

}  // namespace earlyrisk
