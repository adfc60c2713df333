#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ddim::cli {

using json = nlohmann::json;

/// Bad invocation or config; the front end maps it to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { Number, Integer, Boolean, String, IntegerList };

struct Field {
  std::string key;
  Kind kind;
  json fallback;
  std::string help;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<std::string> choices;  // String fields only
};

struct CommandSpec {
  std::string name;
  std::string summary;
  std::vector<Field> fields;
};

const std::vector<CommandSpec>& command_specs();
const CommandSpec* find_command(std::string_view name);

/// JSON Schema (draft 2020-12) for every command's config object.
json config_schema();

struct RunConfig {
  std::string command;
  json params;  // every field present, validated
  std::filesystem::path out = ".";
  int threads = 0;  // 0: runtime default
  bool timestamp = true;

  double num(const std::string& key) const { return params.at(key).get<double>(); }
  long integer(const std::string& key) const { return params.at(key).get<long>(); }
  bool flag(const std::string& key) const { return params.at(key).get<bool>(); }
  std::string str(const std::string& key) const { return params.at(key).get<std::string>(); }
  std::vector<int> ints(const std::string& key) const {
    return params.at(key).get<std::vector<int>>();
  }
};

/// Parses `key=value`; the value is read as JSON when it parses, otherwise
/// kept as a string.
std::pair<std::string, json> parse_override(const std::string& text);

/// Fills defaults and checks keys, types and ranges. Throws UsageError.
json validate(const CommandSpec& spec, const json& raw);

struct Invocation {
  std::string command;
  std::filesystem::path config;
  std::vector<std::string> sets;
  std::optional<unsigned long long> seed;
  std::optional<int> threads;
  std::filesystem::path out = ".";
  bool timestamp = true;
};

/// Reads the config file, applies --set and --seed, resolves the worker
/// count (--threads, then DDIM_THREADS).
RunConfig load(const Invocation& inv);

}  // namespace ddim::cli
