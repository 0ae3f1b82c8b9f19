#include "papertalk/config.hpp"

#include <cstdlib>
#include <fstream>

#include "papertalk/json.hpp"

namespace papertalk {
namespace {

bool parse_flag(const std::string& value) {
  return value == "1" || value == "true" || value == "yes" || value == "on";
}

double parse_number(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, name + " is not a number: '" + value + "'");
  }
}

template <typename T>
void take(const Json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void Config::validate() const {
  try {
    distill.validate();
    chat.budget.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (chat.k_retrieve == 0) throw Error(ErrorCode::kConfigError, "k_retrieve must be at least 1");
  if (backend.embed_batch_size == 0) {
    throw Error(ErrorCode::kConfigError, "embed_batch_size must be at least 1");
  }
  if (backend.max_attempts < 1) throw Error(ErrorCode::kConfigError, "max_attempts must be >= 1");
  if (backend.mock_mode) {
    if (backend.mock_dimension < 2) throw Error(ErrorCode::kConfigError, "mock_dimension must be >= 2");
    return;
  }
  const std::pair<const char*, const std::string*> required[] = {
      {"PAPERTALK_BASE_URL", &backend.base_url},
      {"PAPERTALK_API_KEY", &backend.api_key},
      {"PAPERTALK_CHAT_MODEL", &backend.chat_model},
      {"PAPERTALK_EMBEDDING_MODEL", &backend.embedding_model},
  };
  for (const auto& [name, value] : required) {
    if (value->empty()) {
      throw Error(ErrorCode::kConfigError,
                  std::string(name) + " is not set (or enable mock mode)");
    }
  }
}

Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  Config c;
  if (auto v = env("PAPERTALK_BASE_URL")) c.backend.base_url = *v;
  if (auto v = env("PAPERTALK_API_KEY")) c.backend.api_key = *v;
  if (auto v = env("PAPERTALK_CHAT_MODEL")) c.backend.chat_model = *v;
  if (auto v = env("PAPERTALK_EMBEDDING_MODEL")) c.backend.embedding_model = *v;
  if (auto v = env("PAPERTALK_TEMPERATURE")) c.backend.temperature = parse_number("PAPERTALK_TEMPERATURE", *v);
  if (auto v = env("PAPERTALK_MOCK")) c.backend.mock_mode = parse_flag(*v);
  if (auto v = env("PAPERTALK_WORKSPACE")) c.workspace = *v;

  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::kConfigError, "cannot read config file " + file->string());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfigError, file->string() + ": " + e.what());
    }
    take(j, "base_url", c.backend.base_url);
    take(j, "api_key", c.backend.api_key);
    take(j, "chat_model", c.backend.chat_model);
    take(j, "embedding_model", c.backend.embedding_model);
    take(j, "temperature", c.backend.temperature);
    take(j, "mock_mode", c.backend.mock_mode);
    take(j, "mock_dimension", c.backend.mock_dimension);
    take(j, "embed_batch_size", c.backend.embed_batch_size);
    take(j, "max_attempts", c.backend.max_attempts);
    take(j, "base_delay_ms", c.backend.base_delay_ms);
    take(j, "timeout_seconds", c.backend.timeout_seconds);
    take(j, "k_retrieve", c.chat.k_retrieve);
    take(j, "max_total_tokens", c.chat.budget.max_total);
    take(j, "reserved_for_reply", c.chat.budget.reserved_for_reply);
    take(j, "target_ratio", c.distill.target_ratio);
    take(j, "ratio_tolerance", c.distill.ratio_tolerance);
    take(j, "max_retries", c.distill.max_retries);
    take(j, "max_batch_paragraphs", c.distill.max_batch_paragraphs);
    take(j, "merge_token_cap", c.chunking.merge_token_cap);
    if (j.contains("workspace")) c.workspace = j.at("workspace").get<std::string>();
  }
  c.distill.budget = c.chat.budget;
  return c;
}

}  // namespace papertalk
