#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "dynfilter/error.hpp"
#include "dynfilter/odometry.hpp"

namespace dynfilter {
namespace {

// Bounded single-producer queue. The loader stops early when the consumer
// goes away.
class FrameQueue {
 public:
  explicit FrameQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

  void push(FrameData frame) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return;
    items_.push_back(std::move(frame));
    not_empty_.notify_one();
  }

  void fail(std::exception_ptr error) {
    std::lock_guard lock(mutex_);
    error_ = error;
    not_empty_.notify_one();
  }

  FrameData pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || error_; });
    if (items_.empty()) std::rethrow_exception(error_);
    FrameData frame = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return frame;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<FrameData> items_;
  std::exception_ptr error_;
  bool closed_ = false;
};

std::vector<PointPair> tracked_pairs(const FilterResult& r, const FeatureFrame& prev,
                                     const FeatureFrame& curr, bool filtering) {
  std::vector<PointPair> pairs;
  for (const auto& m : r.matches) {
    if (filtering && r.verdicts[m.query_index].removed()) continue;
    pairs.push_back({prev.keypoints[m.ref_index].position, curr.keypoints[m.query_index].position});
  }
  return pairs;
}

FilterResult unfiltered(const FrameData* prev, const FrameData& curr, const FilterConfig& config) {
  FilterResult r;
  r.report.frame_id = curr.features.frame_id;
  if (prev && !prev->features.empty() && !curr.features.empty()) {
    r.matches = match_nearest_neighbor(prev->features, curr.features, config.matching);
  }
  r.verdicts.assign(curr.features.size(), KeypointVerdict::make_static());
  r.report.n_static = curr.features.size();
  return r;
}

}  // namespace

SequenceResult run_sequence(const FrameSource& source, const SequenceOptions& options) {
  const std::size_t n = source.size();
  if (n == 0) throw Error(ErrorCode::DatasetError, "dataset has no frames");
  const CameraIntrinsics k = source.intrinsics();

  FrameQueue queue(options.prefetch);
  std::thread loader([&] {
    try {
      for (std::size_t i = 0; i < n; ++i) queue.push(source.load(i));
    } catch (...) {
      queue.fail(std::current_exception());
    }
  });
  struct Joiner {
    FrameQueue& q;
    std::thread& t;
    ~Joiner() {
      q.close();
      t.join();
    }
  } joiner{queue, loader};

  SequenceResult out;
  std::optional<FrameData> prev;
  PoseSE3 pose;
  for (std::size_t i = 0; i < n; ++i) {
    FrameData curr = queue.pop();
    const FrameView curr_view{curr.features, curr.panoptic};
    const double timestamp = curr.features.timestamp;

    FilterResult r;
    if (!prev) {
      r = options.filtering ? filter_first_frame(curr_view, options.filter)
                            : unfiltered(nullptr, curr, options.filter);
      pose = PoseSE3{};
      pose.timestamp = timestamp;
    } else {
      bool classified = true;
      if (options.filtering) {
        try {
          r = filter_frame_pair({prev->features, prev->panoptic}, curr_view, options.filter);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientBackground) throw;
          classified = false;
          r = FilterResult{};
          r.report.frame_id = curr.features.frame_id;
          r.report.fallback_used = true;
          r.report.n_unmatched = curr.features.size();
          r.verdicts.assign(curr.features.size(), KeypointVerdict::unmatched());
        }
      } else {
        r = unfiltered(&*prev, curr, options.filter);
      }
      if (classified) {
        const auto pairs = tracked_pairs(r, prev->features, curr.features, options.filtering);
        const TrackResult t = track_frame(pose, pairs, k, timestamp, options.tracking);
        pose = t.pose;
        if (t.tracking_lost) ++out.lost_frames;
      } else {
        pose.timestamp = timestamp;
        ++out.lost_frames;
      }
    }
    out.trajectory.push_back(pose);
    out.reports.push_back(r.report);
    out.verdicts.push_back(std::move(r.verdicts));
    prev = std::move(curr);
  }
  return out;
}

}  // namespace dynfilter
