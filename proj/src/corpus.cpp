#include "charcurve/corpus.hpp"

#include <fstream>
#include <sstream>

#include "charcurve/error.hpp"

namespace charcurve {

void ParallelText::check_aligned() const {
  if (src.size() != tgt.size()) {
    throw Error(ErrorCode::kMisalignedCorpus, std::to_string(src.size()) + " source lines vs " +
                                                  std::to_string(tgt.size()) + " target lines");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(path, text);
}

ParallelText read_parallel(const std::string& src_path, const std::string& tgt_path) {
  ParallelText p{read_lines(src_path), read_lines(tgt_path)};
  p.check_aligned();
  return p;
}

}  // namespace charcurve
