#include "tdreg/types.hpp"

#include <string>

#include "tdreg/errors.hpp"

namespace tdreg {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Gmm ? "gmm" : "lda";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gmm") return ModelKind::Gmm;
  if (name == "lda") return ModelKind::Lda;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected gmm or lda)");
}

}  // namespace tdreg
