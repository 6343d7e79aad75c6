#include "attrforge/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace attrforge {

namespace {

struct CtxFree {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string finish_hex(EVP_MD_CTX* ctx) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) {
    throw std::runtime_error("sha256: digest finalization failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(len) * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::unique_ptr<EVP_MD_CTX, CtxFree> make_ctx() {
  std::unique_ptr<EVP_MD_CTX, CtxFree> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: context initialization failed");
  }
  return ctx;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  auto ctx = make_ctx();
  if (EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1) {
    throw std::runtime_error("sha256: digest update failed");
  }
  return finish_hex(ctx.get());
}

std::string sha256_file_hex(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) {
    throw std::runtime_error("sha256: cannot open file " + path);
  }
  auto ctx = make_ctx();
  std::array<char, 1 << 16> buf{};
  while (true) {
    std::size_t got = std::fread(buf.data(), 1, buf.size(), file.get());
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), got) != 1) {
      throw std::runtime_error("sha256: digest update failed");
    }
    if (got < buf.size()) {
      if (std::ferror(file.get())) {
        throw std::runtime_error("sha256: read error on " + path);
      }
      break;
    }
  }
  return finish_hex(ctx.get());
}

}  // namespace attrforge
