/* Copyright 2026 The nnl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

	http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
--------------------------------------------------------------------------------------------------------------*/

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

// Static-partition parallel loops. Work items are always independent (each
// writes its own output slot), so results never depend on the thread count.
// Reductions are done by the caller in index order after the loop returns.
namespace nnl {

namespace detail {
inline std::atomic<int>& thread_setting()
{
	static std::atomic<int> threads{1};
	return threads;
}
} // namespace detail

inline void set_num_threads(int threads)
{
	detail::thread_setting().store(std::max(1, threads));
}

inline int num_threads()
{
	return detail::thread_setting().load();
}

// Restores the previous thread count on scope exit.
class ThreadScope {
public:
	explicit ThreadScope(int threads) : saved_(num_threads()) { set_num_threads(threads); }
	~ThreadScope() { set_num_threads(saved_); }
	ThreadScope(const ThreadScope&) = delete;
	ThreadScope& operator=(const ThreadScope&) = delete;

private:
	int saved_;
};

// Calls body(i) for every i in [0, count). Items are split into contiguous
// ranges, one per worker. The first exception thrown by any worker is
// rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_per_thread = 1)
{
	const std::size_t max_workers = min_per_thread == 0 ? count : count / std::max<std::size_t>(min_per_thread, 1);
	const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), std::max<std::size_t>(max_workers, 1));
	if (workers <= 1 || count <= 1) {
		for (std::size_t i = 0; i < count; ++i) {
			body(i);
		}
		return;
	}

	std::exception_ptr failure;
	std::mutex failure_mutex;
	auto run_range = [&](std::size_t begin, std::size_t end) {
		try {
			for (std::size_t i = begin; i < end; ++i) {
				body(i);
			}
		} catch (...) {
			std::lock_guard lock(failure_mutex);
			if (!failure) {
				failure = std::current_exception();
			}
		}
	};

	std::vector<std::jthread> pool;
	pool.reserve(workers - 1);
	const std::size_t chunk = count / workers;
	const std::size_t extra = count % workers;
	std::size_t begin = 0;
	std::size_t first_end = 0;
	for (std::size_t w = 0; w < workers; ++w) {
		const std::size_t end = begin + chunk + (w < extra ? 1 : 0);
		if (w == 0) {
			first_end = end;
		} else {
			pool.emplace_back(run_range, begin, end);
		}
		begin = end;
	}
	run_range(0, first_end);
	pool.clear();
	if (failure) {
		std::rethrow_exception(failure);
	}
}

} // namespace nnl
