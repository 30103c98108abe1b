#pragma once

namespace klap {

// Execution policy for the data-parallel kernels. Every parallel
// implementation assigns whole output elements to threads and keeps the
// per-element reduction order identical to the serial reference, so the
// two policies produce bitwise-identical results. The serial path is
// kept as the reference implementation for testing and benchmarking.
enum class Exec { serial, parallel };

// Number of OpenMP threads the parallel policy will use (1 when built
// without OpenMP).
int thread_count();

// Caps the OpenMP thread pool; values < 1 are ignored.
void set_thread_count(int n);

}  // namespace klap
