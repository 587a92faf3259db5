#include <charconv>
#include <cstdio>
#include <json.hpp>

#include "binio.hpp"
#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

std::string entropy_dump_to_bytes(const EntropyTrace& trace, DumpEncoding encoding) {
  nlohmann::ordered_json header;
  header["vocab_hash"] = hash_hex(trace.vocab_hash);
  header["stream_length"] = trace.size();
  header["unit"] = "bits";
  header["kind"] = trace_kind_name(trace.kind);
  header["encoding"] = encoding == DumpEncoding::f32le ? "f32le" : "text";
  std::string out = header.dump();
  out += '\n';
  if (encoding == DumpEncoding::f32le) {
    out.reserve(out.size() + trace.size() * 4);
    for (double v : trace.values) binio::put<float>(out, static_cast<float>(v));
  } else {
    char buf[32];
    for (double v : trace.values) {
      const int n = std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out.append(buf, static_cast<std::size_t>(n));
    }
  }
  return out;
}

EntropyTrace entropy_dump_from_bytes(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw Error("entropy dump: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("entropy dump: bad header: ") + e.what());
  }
  EntropyTrace trace;
  std::uint64_t length = 0;
  std::string encoding;
  try {
    if (header.at("unit").get<std::string>() != "bits") throw Error("entropy dump: unit must be \"bits\"");
    const auto kind = header.at("kind").get<std::string>();
    if (kind == "entropy") {
      trace.kind = TraceKind::entropy;
    } else if (kind == "nll") {
      trace.kind = TraceKind::nll;
    } else {
      throw Error("entropy dump: unknown kind \"" + kind + "\"");
    }
    const auto hash = header.at("vocab_hash").get<std::string>();
    std::uint64_t h = 0;
    auto [ptr, ec] = std::from_chars(hash.data(), hash.data() + hash.size(), h, 16);
    if (ec != std::errc() || ptr != hash.data() + hash.size()) throw Error("entropy dump: bad vocab_hash");
    trace.vocab_hash = h;
    length = header.at("stream_length").get<std::uint64_t>();
    if (header.contains("encoding")) encoding = header["encoding"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("entropy dump: bad header: ") + e.what());
  }

  std::string_view payload = bytes.substr(eol + 1);
  if (encoding.empty()) encoding = payload.size() == length * 4 ? "f32le" : "text";
  if (encoding == "f32le") {
    if (payload.size() != length * 4) {
      throw Error("entropy dump: length mismatch: header says " + std::to_string(length) + " values, payload holds " +
                  std::to_string(payload.size() / 4));
    }
    binio::Reader in(payload, "entropy dump");
    trace.values.resize(length);
    for (auto& v : trace.values) v = static_cast<double>(in.get<float>());
  } else if (encoding == "text") {
    trace.values.reserve(length);
    std::size_t pos = 0;
    while (pos < payload.size()) {
      std::size_t end = payload.find('\n', pos);
      if (end == std::string_view::npos) end = payload.size();
      std::string_view line = payload.substr(pos, end - pos);
      pos = end + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || ptr != line.data() + line.size()) {
        throw Error("entropy dump: bad value on line " + std::to_string(trace.values.size() + 2));
      }
      trace.values.push_back(v);
    }
    if (trace.values.size() != length) {
      throw Error("entropy dump: length mismatch: header says " + std::to_string(length) + " values, payload holds " +
                  std::to_string(trace.values.size()));
    }
  } else {
    throw Error("entropy dump: unknown encoding \"" + encoding + "\"");
  }
  for (std::size_t t = 0; t < trace.values.size(); ++t) {
    if (!(trace.values[t] >= 0.0)) throw Error("entropy dump: negative or NaN value at position " + std::to_string(t));
  }
  return trace;
}

void save_entropy_dump(const EntropyTrace& trace, const std::string& path, DumpEncoding encoding) {
  write_file_atomic(path, entropy_dump_to_bytes(trace, encoding));
}

EntropyTrace load_entropy_dump(const std::string& path, const TokenStream& stream) {
  EntropyTrace trace;
  try {
    trace = entropy_dump_from_bytes(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  if (trace.vocab_hash != stream.vocab_hash) {
    throw Error(path + ": vocab hash mismatch: dump " + hash_hex(trace.vocab_hash) + ", stream " +
                hash_hex(stream.vocab_hash));
  }
  if (trace.size() != stream.size()) {
    throw Error(path + ": length mismatch: dump has " + std::to_string(trace.size()) + " values, stream has " +
                std::to_string(stream.size()) + " tokens");
  }
  return trace;
}

}  // namespace dyntok
