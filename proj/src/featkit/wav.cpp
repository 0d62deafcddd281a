#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "awe/error.hpp"
#include "awe/featkit.hpp"
#include "common/binary_io.hpp"

namespace awe::featkit {

namespace {

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  const auto buf = slurp(path);
  if (buf.size() < 12 || std::string(buf.data(), 4) != "RIFF" ||
      std::string(buf.data() + 8, 4) != "WAVE")
    throw IoError(path + ": not a RIFF/WAVE file");

  std::size_t pos = 12;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw IoError(path + ": truncated chunk " + id);
    if (id == "fmt ") {
      if (size < 16) throw IoError(path + ": short fmt chunk");
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError(path + ": data chunk before fmt");
      if (format != 1 || bits != 16 || channels != 1)
        throw IoError(path + ": only mono 16-bit PCM is supported");
      if (rate == 0) throw IoError(path + ": zero sample rate");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = read_le<std::int16_t>(buf, body + 2 * i);
      if (w.samples.empty()) throw IoError(path + ": no samples");
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw IoError(path + ": no data chunk");
}

void write_wav(const Waveform& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  io::put<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  io::put<std::uint32_t>(os, 16);
  io::put<std::uint16_t>(os, 1);
  io::put<std::uint16_t>(os, 1);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(w.sample_rate));
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(w.sample_rate) * 2);
  io::put<std::uint16_t>(os, 2);
  io::put<std::uint16_t>(os, 16);
  os.write("data", 4);
  io::put<std::uint32_t>(os, data_bytes);
  for (double s : w.samples) {
    const double clipped = s < -32768.0 ? -32768.0 : (s > 32767.0 ? 32767.0 : s);
    io::put<std::int16_t>(os, static_cast<std::int16_t>(std::lround(clipped)));
  }
}

Waveform read_raw_float(const std::string& path, int sample_rate) {
  if (sample_rate <= 0) throw InvalidConfig("sample rate must be positive");
  const auto buf = slurp(path);
  if (buf.empty() || buf.size() % 4 != 0) throw IoError(path + ": not a float32 sample file");
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(buf.size() / 4);
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = read_le<float>(buf, 4 * i);
  return w;
}

}  // namespace awe::featkit
