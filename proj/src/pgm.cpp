#include "rcamp/pgm.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rcamp {

void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> gray,
               const std::string& comment) {
  if (gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pgm: pixel count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n";
  std::istringstream lines(comment);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace rcamp
