#include "binio.hpp"
#include "dyntok/codec.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

namespace {
constexpr std::string_view kStreamMagic = "DTKSTRM1";
}

std::string stream_to_bytes(const TokenStream& stream) {
  std::string out;
  out.reserve(32 + stream.size() * 12);
  out.append(kStreamMagic);
  binio::put<std::uint64_t>(out, stream.vocab_hash);
  binio::put<std::uint64_t>(out, stream.text_length);
  binio::put<std::uint64_t>(out, stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    binio::put<std::uint32_t>(out, stream.ids[t]);
    binio::put<std::uint64_t>(out, stream.offsets[t]);
  }
  return out;
}

TokenStream stream_from_bytes(std::string_view bytes) {
  binio::Reader in(bytes, "token stream");
  in.expect_magic(kStreamMagic);
  TokenStream s;
  s.vocab_hash = in.get<std::uint64_t>();
  s.text_length = in.get<std::uint64_t>();
  const auto count = in.get<std::uint64_t>();
  if (count > in.remaining() / 12 || in.remaining() != count * 12) throw Error("token stream: payload size does not match count");
  s.ids.resize(count);
  s.offsets.resize(count);
  for (std::uint64_t t = 0; t < count; ++t) {
    s.ids[t] = in.get<std::uint32_t>();
    s.offsets[t] = in.get<std::uint64_t>();
    if (t > 0 && s.offsets[t] <= s.offsets[t - 1])
      throw Error("token stream: offsets not strictly increasing at position " + std::to_string(t));
  }
  if (count > 0 && (s.offsets[0] != 0 || s.offsets.back() >= s.text_length))
    throw Error("token stream: offsets outside the text");
  return s;
}

void save_stream(const TokenStream& stream, const std::string& path) {
  write_file_atomic(path, stream_to_bytes(stream));
}

TokenStream load_stream(const std::string& path) {
  try {
    return stream_from_bytes(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace dyntok
