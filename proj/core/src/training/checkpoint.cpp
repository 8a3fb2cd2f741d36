#include "espresso/training/checkpoint.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace espresso {

namespace {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("checkpoint: cannot format value");
  return std::string(buf.data(), end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::runtime_error("checkpoint: bad value '" + text + "'");
  }
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    out << p->name << ' ' << p->value.rank();
    for (auto extent : p->value.shape()) out << ' ' << extent;
    for (double v : p->value.data()) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void load_checkpoint(std::istream& in, std::span<Parameter* const> params) {
  std::string line;
  for (Parameter* p : params) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("checkpoint: missing entry for " + p->name);
    }
    std::istringstream fields(line);
    std::string name;
    std::size_t rank = 0;
    fields >> name >> rank;
    if (name != p->name) {
      throw std::runtime_error("checkpoint: expected " + p->name + ", found " + name);
    }
    Shape shape(rank);
    for (auto& extent : shape) fields >> extent;
    if (!fields || shape != p->value.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
    }
    Tensor value(shape);
    std::string token;
    for (auto& v : value.data()) {
      if (!(fields >> token)) throw std::runtime_error("checkpoint: truncated " + p->name);
      v = parse_double(token);
    }
    p->value = std::move(value);
  }
  if (std::getline(in, line) && !line.empty()) {
    throw std::runtime_error("checkpoint: unexpected trailing entry");
  }
}

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  save_checkpoint(out, params);
}

void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  load_checkpoint(in, params);
}

}  // namespace espresso
