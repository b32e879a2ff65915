#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace piuma {

using Cycles = std::uint64_t;

// Deterministic discrete-event engine. Events fire in (time, seq) order;
// seq is assigned at schedule time, so ties break by insertion order.
class SimEngine {
public:
    using Action = std::function<void(Cycles now)>;

    enum class Stop { Idle, AllDone, Limit, Deadlock };

    std::uint64_t schedule(Cycles delay, int target, const char* tag, Action action) {
        Event ev;
        ev.time = now_ + delay;
        ev.seq = next_seq_++;
        ev.target = target;
        ev.tag = tag;
        ev.action = std::move(action);
        const std::uint64_t seq = ev.seq;
        queue_.push(std::move(ev));
        return seq;
    }

    Cycles now() const { return now_; }
    bool empty() const { return queue_.empty(); }
    std::uint64_t events_processed() const { return processed_; }

    void set_event_log(std::vector<std::string>* log) { event_log_ = log; }

    // Drains the queue. done_check, when set, lets the caller declare the run
    // finished (all programs halted) before the queue empties.
    Stop run(Cycles cycle_limit = 0, std::uint64_t event_limit = 0,
             std::function<bool()> done_check = nullptr) {
        while (!queue_.empty()) {
            if (cycle_limit && queue_.top().time > cycle_limit) return Stop::Limit;
            if (event_limit && processed_ >= event_limit) return Stop::Limit;
            Event ev = std::move(const_cast<Event&>(queue_.top()));
            queue_.pop();
            now_ = ev.time;  // monotone: heap order guarantees no decrease
            if (event_log_) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%llu,%llu,%d,%s",
                              (unsigned long long)ev.time, (unsigned long long)ev.seq,
                              ev.target, ev.tag);
                event_log_->emplace_back(buf);
            }
            ++processed_;
            ev.action(now_);
            if (done_check && done_check() && queue_.empty()) return Stop::AllDone;
        }
        if (done_check) return done_check() ? Stop::AllDone : Stop::Deadlock;
        return Stop::Idle;
    }

private:
    struct Event {
        Cycles time;
        std::uint64_t seq;
        int target;
        const char* tag;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    Cycles now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
    std::vector<std::string>* event_log_ = nullptr;
};

}  // namespace piuma
