#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace houseprice {

/// Incremental SHA-256, hex-encoded digest.
class Sha256 {
public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  std::string hex_digest();

private:
  void* ctx_;
};

std::string sha256_hex(std::string_view text);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace houseprice
