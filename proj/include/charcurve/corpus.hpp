#pragma once

#include <string>
#include <vector>

namespace charcurve {

// Line-aligned parallel text.
struct ParallelText {
  std::vector<std::string> src;
  std::vector<std::string> tgt;

  std::size_t size() const { return src.size(); }
  // Throws kMisalignedCorpus.
  void check_aligned() const;
};

// UTF-8 lines without terminators; a trailing newline does not add a line.
// Throws kMissingFile.
std::vector<std::string> read_lines(const std::string& path);
// Throws kIo.
void write_lines(const std::string& path, const std::vector<std::string>& lines);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

ParallelText read_parallel(const std::string& src_path, const std::string& tgt_path);

}  // namespace charcurve
