#include "espresso/projectors/config.hpp"

namespace espresso {

ProjectorKind parse_projector_kind(const std::string& text) {
  if (text == "espresso") return ProjectorKind::espresso;
  if (text == "mlp") return ProjectorKind::mlp;
  if (text == "pr") return ProjectorKind::pr;
  if (text == "meanpool") return ProjectorKind::meanpool;
  throw ConfigError("kind", "unknown projector kind '" + text + "'");
}

std::string to_string(ProjectorKind kind) {
  switch (kind) {
    case ProjectorKind::espresso: return "espresso";
    case ProjectorKind::mlp: return "mlp";
    case ProjectorKind::pr: return "pr";
    case ProjectorKind::meanpool: return "meanpool";
  }
  return "unknown";
}

void EspressoConfig::validate() const {
  auto positive = [](const char* key, std::size_t v) {
    if (v == 0) throw ConfigError(key, "must be >= 1");
  };
  positive("dv", feature_width);
  positive("dllm", llm_width);
  positive("p", spatial_queries);
  positive("t", temporal_queries);
  positive("n", segments);
  positive("L", resampler_queries);
  positive("heads", heads);
  positive("blocks", blocks);
  positive("ffn_mult", ffn_mult);
  if (feature_width % 2 != 0) throw ConfigError("dv", "must be even");
  if (llm_width % 2 != 0) throw ConfigError("dllm", "must be even");
  if (feature_width % heads != 0) throw ConfigError("heads", "must divide dv");
  if (llm_width % heads != 0) throw ConfigError("heads", "must divide dllm");
}

}  // namespace espresso
