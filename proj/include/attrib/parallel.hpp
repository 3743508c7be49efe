#pragma once

#include <cstddef>
#include <exception>

namespace attrib {

/// Caps the OpenMP worker count (no-op in serial builds). 0 keeps the
/// runtime default.
void set_worker_count(std::size_t workers);

std::size_t worker_count();

/// parallel for over [0, n) with exceptions marshalled out of the region
/// (the first one thrown wins). The body must write only to its own slot;
/// callers do any cross-slot reduction afterwards in fixed index order.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
    std::exception_ptr err = nullptr;
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(attrib_parallel_for_err)
            {
                if (!err) err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace attrib
