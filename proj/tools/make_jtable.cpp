// Builds the axis-exchange block table up to a band limit and saves it to
// disk, so long-running experiments can load it instead of rebuilding.
//
// Usage: make_jtable <lmax> <output-path>

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "so3rep/so3rep.h"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <lmax> <output-path>\n", argv[0]);
    return 2;
  }
  char* end = nullptr;
  const long lmax = std::strtol(argv[1], &end, 10);
  if (end == argv[1] || *end != '\0' || lmax < 0 || lmax > 512) {
    std::fprintf(stderr, "make_jtable: lmax must be an integer in [0, 512]\n");
    return 2;
  }

  so3rep_jtable* jt = so3rep_jtable_build(static_cast<int>(lmax));
  if (jt == nullptr) {
    std::fprintf(stderr, "make_jtable: %s\n", so3rep_last_error());
    return 1;
  }
  const int status = so3rep_jtable_save(jt, argv[2]);
  so3rep_jtable_destroy(jt);
  if (status != SO3REP_OK) {
    std::fprintf(stderr, "make_jtable: %s\n", so3rep_last_error());
    return 2;
  }
  std::printf("wrote axis-exchange table (lmax=%ld) to %s\n", lmax, argv[2]);
  return 0;
}
