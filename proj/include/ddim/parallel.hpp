#pragma once

// Thread control for the OpenMP kernels. Every parallel kernel has a serial
// twin selected with Exec::Serial; both produce results in the same order.

namespace ddim {

enum class Exec { Serial, Parallel };

/// Worker count used by Exec::Parallel kernels (1 without OpenMP).
int worker_count();
/// Sets the worker count; n <= 0 restores the runtime default.
void set_worker_count(int n);

}  // namespace ddim
