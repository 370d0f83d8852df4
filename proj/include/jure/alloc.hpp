#pragma once

// Training allocates and frees multi-megabyte activation buffers every step.
// With glibc's defaults each of those round-trips through mmap/munmap, which
// costs about a third of the run time. Executables call this once at startup.

#include <cstdlib>  // defines __GLIBC__ on glibc systems

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace jure {

inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // glibc's ceiling
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace jure
