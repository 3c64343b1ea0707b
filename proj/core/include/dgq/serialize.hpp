#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "dgq/classifier.hpp"
#include "dgq/mdp.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

std::string serialize_env(const EnvSpec& env, const Classifier& cls);
std::pair<EnvSpec, Classifier> deserialize_env(const std::string& text);
void save_env(const EnvSpec& env, const Classifier& cls, const std::string& path);
std::pair<EnvSpec, Classifier> load_env(const std::string& path);

/// FNV-1a hash of the canonical env serialization.
std::uint64_t env_fingerprint(const EnvSpec& env, const Classifier& cls);

std::string serialize_policy(const Policy& pi);
Policy deserialize_policy(const std::string& text);
void save_policy(const Policy& pi, const std::string& path);
Policy load_policy(const std::string& path);

std::string serialize_qfunction(const QFunction& q);
QFunction deserialize_qfunction(const std::string& text);
void save_qfunction(const QFunction& q, const std::string& path);
QFunction load_qfunction(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dgq
