// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace forestseg {

/// Sets the worker count for all parallel sections. n <= 0 restores the
/// hardware default. Every parallel section in this library produces
/// results that are independent of the worker count.
void set_thread_count(int n);

/// Effective worker count for parallel sections.
int thread_count();

}  // namespace forestseg
