#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "loop2rec/parser.hpp"

namespace testing {

inline std::string corpus_path(const std::string& name) {
  return std::string(LOOP2REC_CORPUS_DIR) + "/" + name;
}

inline std::string read_corpus(const std::string& name) {
  std::ifstream in(corpus_path(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline loop2rec::Program load(const std::string& name) {
  return loop2rec::parse(read_corpus(name));
}

}  // namespace testing
