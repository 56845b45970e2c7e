#include "pmon/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "pmon/errors.hpp"

namespace pmon {
namespace {

using EvpCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

std::string finish_hex(EVP_MD_CTX* ctx) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    throw NumericalError("sha256: digest finalization failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

EvpCtx make_sha256_ctx() {
  EvpCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256: context initialization failed");
  }
  return ctx;
}

}  // namespace

std::string sha256_hex(const void* data, std::size_t size) {
  EvpCtx ctx = make_sha256_ctx();
  if (size > 0 && EVP_DigestUpdate(ctx.get(), data, size) != 1) {
    throw NumericalError("sha256: digest update failed");
  }
  return finish_hex(ctx.get());
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(text.data(), text.size());
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("manifest: cannot read " + path);
  EvpCtx ctx = make_sha256_ctx();
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    if (got > 0 &&
        EVP_DigestUpdate(ctx.get(), buf.data(),
                         static_cast<std::size_t>(got)) != 1) {
      throw NumericalError("sha256: digest update failed");
    }
  }
  if (in.bad()) throw ConfigError("manifest: read error on " + path);
  return finish_hex(ctx.get());
}

std::string manifest_text(const std::string& resolved_config,
                          std::uint64_t seed,
                          const std::vector<ManifestEntry>& outputs) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["seed"] = seed;
  doc["config"] = nlohmann::json::parse(resolved_config);
  nlohmann::json files = nlohmann::json::array();
  for (const ManifestEntry& e : outputs) {
    files.push_back({{"path", e.path}, {"sha256", e.sha256}});
  }
  doc["outputs"] = std::move(files);
  return doc.dump(2) + "\n";
}

}  // namespace pmon
