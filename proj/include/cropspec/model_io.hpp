#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "cropspec/classify.hpp"
#include "cropspec/mlp.hpp"

namespace cropspec {

// Plain-text model files. The format is line-oriented and self-describing
// (first line "cropspec model v1", second line the model type); every number
// is written in shortest round-trip form, so save followed by load reproduces
// the model bit for bit. Cholesky factors are stored as their lower
// triangles, one row per line.

void write_model(std::ostream& out, const DiscriminantModel& m);
void write_model(std::ostream& out, const MLPModel& m);

void save_model(const DiscriminantModel& m, const std::string& path);
void save_model(const MLPModel& m, const std::string& path);

DiscriminantModel read_discriminant_model(std::istream& in);
MLPModel read_mlp_model(std::istream& in);

using AnyModel = std::variant<DiscriminantModel, MLPModel>;

// Reads either model type, dispatching on the type line. Throws DataError
// with the offending line number on malformed input.
AnyModel load_model(const std::string& path);

}  // namespace cropspec
