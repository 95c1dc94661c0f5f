#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <openssl/evp.h>

#include "vpace/io.hpp"

namespace vpace {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of `text`.
inline std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string out;
  char hex[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(hex, sizeof hex, "%02x", digest[k]);
    out += hex;
  }
  return out;
}

/// Digest of the canonical serialization, so reformatting a file keeps it.
inline std::string instance_digest(const AuctionInstance& inst) {
  return sha256_hex(io::canonical_instance_text(inst));
}

struct RunManifest {
  std::string command;
  std::string instance_digest;
  io::json options = io::json::object();
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  double wall_seconds = 0.0;
  io::json outcome = io::json::object();

  io::json to_json() const {
    return {{"command", command},         {"instance_digest", instance_digest},
            {"options", options},         {"seed", seed},
            {"tool_version", tool_version}, {"wall_seconds", wall_seconds},
            {"outcome", outcome}};
  }
};

}  // namespace vpace
