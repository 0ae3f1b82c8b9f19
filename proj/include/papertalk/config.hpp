#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "papertalk/chat.hpp"
#include "papertalk/distill.hpp"
#include "papertalk/vindex.hpp"

namespace papertalk {

struct BackendConfig {
  // OpenAI-compatible API root including the version prefix, e.g.
  // "https://host/v1". Required outside mock mode.
  std::string base_url;
  std::string api_key;
  std::string chat_model;
  std::string embedding_model;
  double temperature = 0.0;
  bool mock_mode = false;
  std::size_t mock_dimension = 64;
  std::size_t embed_batch_size = 16;
  int max_attempts = 3;
  int base_delay_ms = 1000;
  int timeout_seconds = 120;
};

struct Config {
  BackendConfig backend;
  ChatConfig chat;
  DistillationPolicy distill;
  ChunkingConfig chunking;
  std::filesystem::path workspace = "papertalk-data";

  /// Throws kConfigError for an unusable configuration.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Defaults, then PAPERTALK_* environment variables, then the JSON file (if
/// given) on top.
///
///   PAPERTALK_BASE_URL, PAPERTALK_API_KEY, PAPERTALK_CHAT_MODEL,
///   PAPERTALK_EMBEDDING_MODEL, PAPERTALK_TEMPERATURE, PAPERTALK_MOCK,
///   PAPERTALK_WORKSPACE
Config load_config(const std::optional<std::filesystem::path>& file = std::nullopt,
                   const EnvLookup& env = process_env);

}  // namespace papertalk
