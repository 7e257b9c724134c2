#include "protogram/simnet.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <queue>
#include <set>

#include "json.hpp"
#include "protogram/checksum.hpp"
#include "protogram/error.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

constexpr std::uint64_t kSeqMask48 = (std::uint64_t{1} << 48) - 1;

std::int64_t delta48(std::uint64_t a, std::uint64_t b) {
  // a - b as a signed 48-bit quantity
  std::uint64_t d = (a - b) & kSeqMask48;
  if (d & (std::uint64_t{1} << 47)) return static_cast<std::int64_t>(d) - (std::int64_t{1} << 48);
  return static_cast<std::int64_t>(d);
}

std::vector<std::uint8_t> app_payload(char who, int k) {
  std::vector<std::uint8_t> p(8);
  p[0] = static_cast<std::uint8_t>(who);
  p[1] = static_cast<std::uint8_t>(k);
  for (int i = 2; i < 8; ++i) p[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((k * 31 + i * 7) & 0xFF);
  return p;
}

void put16(std::vector<std::uint8_t>& b, std::size_t at, std::uint16_t v) {
  b[at] = static_cast<std::uint8_t>(v >> 8);
  b[at + 1] = static_cast<std::uint8_t>(v);
}

// ---------------------------------------------------------------------------
// Event loop

class Sim;

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void start(Sim&) {}
  virtual void on_packet(Sim& sim, std::vector<std::uint8_t> bytes) = 0;
  virtual void on_timer(Sim& sim) = 0;

  bool done = false;
  bool gave_up = false;
  std::optional<std::string> failure;
  bool timer_armed = false;
  std::uint64_t timer_gen = 0;
  int index = 0;
};

struct Event {
  std::uint64_t time = 0;
  std::uint64_t order = 0;
  bool is_timer = false;
  int endpoint = 0;
  std::uint64_t gen = 0;
  std::vector<std::uint8_t> bytes;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.order > b.order;
  }
};

class Proxy;

class Sim {
 public:
  Sim(const SimOptions& o, Proxy& proxy) : options(o), proxy_(proxy) {}

  void send(int from, std::vector<std::uint8_t> bytes);
  void deliver(int to, std::vector<std::uint8_t> bytes, std::uint64_t extra_delay = 0) {
    queue_.push({now + static_cast<std::uint64_t>(options.latency_ticks) + extra_delay, order_++, false, to, 0,
                 std::move(bytes)});
  }
  void arm_timer(Endpoint& ep) {
    ep.timer_armed = true;
    ++ep.timer_gen;
    queue_.push({now + static_cast<std::uint64_t>(options.rto_ticks), order_++, true, ep.index, ep.timer_gen, {}});
  }
  void cancel_timer(Endpoint& ep) { ep.timer_armed = false; }
  void progress() { progressed_ = true; }

  RunResult run(Endpoint& client, Endpoint& server);

  const SimOptions& options;
  std::uint64_t now = 0;

 private:
  Proxy& proxy_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t order_ = 0;
  bool progressed_ = false;
  Endpoint* eps_[2] = {nullptr, nullptr};
};

// ---------------------------------------------------------------------------
// Malicious proxy

class Proxy {
 public:
  Proxy(ToyProtocol protocol, const TestStrategy& strategy, const ProtocolGrammar& grammar)
      : protocol_(protocol), strategy_(strategy), grammar_(grammar) {
    type_field_ = grammar.field_with(PropertyKind::kPacketType);
    checksum_field_ = grammar.field_with(PropertyKind::kChecksum);
  }

  void forward(Sim& sim, int from, std::vector<std::uint8_t> bytes) {
    const int to = 1 - from;
    trace.push_back(packet_name(bytes));
    ++stats.packets_seen;
    std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>> out;
    bool hold = false;
    if (matches(bytes)) {
      ++stats.packets_matched;
      std::visit(
          [&](const auto& action) {
            using A = std::decay_t<decltype(action)>;
            if constexpr (std::is_same_v<A, NoAction>) {
              out.push_back({std::move(bytes), 0});
            } else if constexpr (std::is_same_v<A, FieldModify>) {
              modify_field(bytes, action);
              out.push_back({std::move(bytes), 0});
            } else if constexpr (std::is_same_v<A, RandomBytes>) {
              const auto before = bytes;
              for (int i : action.indices)
                if (static_cast<std::size_t>(i) < bytes.size())
                  bytes[static_cast<std::size_t>(i)] = random_byte_value(action.seed, i);
              note_modification(before, bytes);
              out.push_back({std::move(bytes), 0});
            } else if constexpr (std::is_same_v<A, Inject>) {
              auto copy = bytes;
              inject_payload_byte(copy, action.seed + stats.injected);
              fix_checksum(copy);
              ++stats.injected;
              out.push_back({std::move(copy), 0});
              out.push_back({std::move(bytes), 0});
            } else if constexpr (std::is_same_v<A, Delivery>) {
              switch (action.kind) {
                case DeliveryKind::kDrop:
                  break;
                case DeliveryKind::kDuplicate:
                  out.push_back({bytes, 0});
                  out.push_back({std::move(bytes), 0});
                  break;
                case DeliveryKind::kDelay:
                  out.push_back({std::move(bytes), static_cast<std::uint64_t>(action.delay_events)});
                  break;
                case DeliveryKind::kReorder:
                  if (held_) {
                    out.push_back({std::move(bytes), 0});
                  } else {
                    held_ = Held{std::move(bytes), to};
                    hold = true;
                  }
                  break;
              }
            }
          },
          strategy_.action);
    } else {
      out.push_back({std::move(bytes), 0});
    }
    for (auto& [b, delay] : out) sim.deliver(to, std::move(b), delay);
    if (held_ && !hold) release(sim);
  }

  // Called when nothing else is in flight.
  bool release(Sim& sim) {
    if (!held_) return false;
    sim.deliver(held_->to, std::move(held_->bytes));
    held_.reset();
    return true;
  }

  PacketTypeTrace trace;
  ProxyStats stats;

 private:
  struct Held {
    std::vector<std::uint8_t> bytes;
    int to = 0;
  };

  std::string packet_name(const std::vector<std::uint8_t>& b) const {
    return protocol_ == ToyProtocol::kTCP ? tcp_packet_name(b) : dccp_packet_name(b);
  }

  bool fits(const GrammarField* f, const std::vector<std::uint8_t>& b) const {
    return f && f->size_bits && f->offset_bits && *f->size_bits <= 64 &&
           static_cast<std::size_t>(*f->offset_bits + *f->size_bits) <= b.size() * 8;
  }

  bool matches(const std::vector<std::uint8_t>& b) const {
    if (!strategy_.target) return true;
    if (!fits(type_field_, b)) return false;
    return read_bits(b, *type_field_->offset_bits, *type_field_->size_bits) == strategy_.target->value;
  }

  bool checksum_ok(const std::vector<std::uint8_t>& b) const {
    if (protocol_ == ToyProtocol::kTCP) return b.size() < 20 || internet_checksum(b) == 0;
    if (b.size() < 16) return true;
    return dccp_checksum(b) == static_cast<std::uint16_t>(b[6] << 8 | b[7]);
  }

  void note_modification(const std::vector<std::uint8_t>& before, const std::vector<std::uint8_t>& after) {
    if (before == after) return;
    ++stats.packets_modified;
    if (!checksum_ok(after)) ++stats.checksum_inconsistent;
  }

  void fix_checksum(std::vector<std::uint8_t>& b) const {
    if (!fits(checksum_field_, b)) return;
    const int off = *checksum_field_->offset_bits, size = *checksum_field_->size_bits;
    write_bits(b, off, size, 0);
    std::uint16_t sum = 0;
    if (protocol_ == ToyProtocol::kTCP) {
      sum = internet_checksum(b);
    } else {
      sum = dccp_checksum(b);
    }
    write_bits(b, off, size, sum);
  }

  void modify_field(std::vector<std::uint8_t>& b, const FieldModify& m) {
    const GrammarField* f = grammar_.field(m.field);
    if (!fits(f, b)) return;
    const auto before = b;
    const std::uint64_t old = read_bits(b, *f->offset_bits, *f->size_bits);
    write_bits(b, *f->offset_bits, *f->size_bits, apply_value_rule(m.rule, old, *f->size_bits));
    if (b != before && f != checksum_field_) fix_checksum(b);
    note_modification(before, b);
  }

  void inject_payload_byte(std::vector<std::uint8_t>& b, std::uint64_t seed) const {
    std::size_t header = 0;
    if (protocol_ == ToyProtocol::kTCP) {
      header = b.size() >= 13 ? static_cast<std::size_t>(b[12] >> 4) * 4 : b.size();
    } else {
      header = b.size() >= 5 ? static_cast<std::size_t>(b[4]) * 4 : b.size();
    }
    header = std::min(header, b.size());
    const std::uint64_t r = text::splitmix64(seed);
    if (header < b.size()) {
      const std::size_t idx = header + static_cast<std::size_t>(r % (b.size() - header));
      b[idx] = static_cast<std::uint8_t>(b[idx] ^ (1 + (r >> 8) % 255));
    } else {
      b.push_back(static_cast<std::uint8_t>(r >> 16));
    }
  }

  ToyProtocol protocol_;
  const TestStrategy& strategy_;
  const ProtocolGrammar& grammar_;
  const GrammarField* type_field_ = nullptr;
  const GrammarField* checksum_field_ = nullptr;
  std::optional<Held> held_;
};

void Sim::send(int from, std::vector<std::uint8_t> bytes) { proxy_.forward(*this, from, std::move(bytes)); }

RunResult Sim::run(Endpoint& client, Endpoint& server) {
  eps_[0] = &client;
  eps_[1] = &server;
  client.index = 0;
  server.index = 1;
  RunResult r;
  client.start(*this);
  server.start(*this);
  std::size_t idle = 0;
  auto finish = [&](Verdict v, std::string reason) {
    r.verdict = v;
    r.reason = std::move(reason);
  };
  r.verdict = Verdict::kStalled;
  for (;;) {
    if (queue_.empty() && !proxy_.release(*this)) {
      finish(Verdict::kStalled, "no events pending");
      break;
    }
    if (r.events_used >= options.event_budget) {
      finish(Verdict::kStalled, "event budget exhausted");
      break;
    }
    Event ev = queue_.top();
    queue_.pop();
    Endpoint& ep = *eps_[ev.endpoint];
    if (ev.is_timer && (!ep.timer_armed || ep.timer_gen != ev.gen)) continue;
    now = ev.time;
    ++r.events_used;
    progressed_ = false;
    if (ev.is_timer) {
      ep.timer_armed = false;
      ep.on_timer(*this);
    } else {
      ep.on_packet(*this, std::move(ev.bytes));
    }
    idle = progressed_ ? 0 : idle + 1;
    if (client.failure || server.failure) {
      finish(Verdict::kFailed, client.failure ? "client: " + *client.failure : "server: " + *server.failure);
      break;
    }
    if (client.done && server.done) {
      finish(Verdict::kCompleted, "connection closed cleanly");
      break;
    }
    if (client.gave_up || server.gave_up) {
      finish(Verdict::kStalled, client.gave_up ? "client retransmissions exhausted" : "server retransmissions exhausted");
      break;
    }
    if (idle >= options.stall_window) {
      finish(Verdict::kStalled, "no progress within stall window");
      break;
    }
  }
  r.trace = proxy_.trace;
  r.proxy = proxy_.stats;
  return r;
}

// ---------------------------------------------------------------------------
// Toy TCP

class TcpEndpoint : public Endpoint {
 public:
  TcpEndpoint(bool client, int data_packets, int max_retries)
      : client_(client), n_(data_packets), max_retries_(max_retries) {
    my_port_ = client ? 40000 : 80;
    peer_port_ = client ? 80 : 40000;
    iss_ = client ? 1000 : 5000;
    snd_una_ = snd_nxt_ = iss_;
    state_ = client ? kClosed : kListen;
  }

  void start(Sim& sim) override {
    if (!client_) return;
    TcpSegment syn = base(tcp_flags::kSyn);
    syn.seq = iss_;
    syn.ack = 0;
    snd_nxt_ = iss_ + 1;
    state_ = kSynSent;
    transmit_reliable(sim, syn, 1);
  }

  void on_timer(Sim& sim) override {
    if (!outstanding_) return;
    if (retries_ >= max_retries_) {
      gave_up = true;
      return;
    }
    ++retries_;
    TcpSegment s = *outstanding_;
    if (s.flags & tcp_flags::kAck) s.ack = rcv_nxt_;
    sim.send(index, serialize_tcp(s));
    sim.arm_timer(*this);
  }

  void on_packet(Sim& sim, std::vector<std::uint8_t> bytes) override {
    if (bytes.size() < 20 || internet_checksum(bytes) != 0) return;
    const TcpSegment seg = parse_tcp(bytes);
    if (seg.data_offset < 5 || static_cast<std::size_t>(seg.data_offset) * 4 > bytes.size()) return;
    const std::size_t len = seg.payload.size();
    auto flag = [&](std::uint8_t f) { return (seg.flags & f) != 0; };

    if (seg.dst_port != my_port_ || seg.src_port != peer_port_) {
      if (!flag(tcp_flags::kRst)) send_reset_for(sim, seg, len);
      return;
    }

    if (state_ == kListen) {
      if (flag(tcp_flags::kRst)) return;
      if (flag(tcp_flags::kAck)) {
        send_reset_for(sim, seg, len);
        return;
      }
      if (!flag(tcp_flags::kSyn)) return;
      rcv_nxt_ = seg.seq + 1;
      peer_window_ = seg.window;
      state_ = kSynRcvd;
      sim.progress();
      TcpSegment sa = base(tcp_flags::kSyn | tcp_flags::kAck);
      sa.seq = iss_;
      snd_nxt_ = iss_ + 1;
      transmit_reliable(sim, sa, 1);
      return;
    }

    if (state_ == kSynSent) {
      const bool ack_ok = flag(tcp_flags::kAck) && seg.ack == iss_ + 1;
      if (flag(tcp_flags::kAck) && !ack_ok) {
        if (!flag(tcp_flags::kRst)) send_reset_for(sim, seg, len);
        return;
      }
      if (flag(tcp_flags::kRst)) {
        if (ack_ok) failure = "connection refused";
        return;
      }
      if (!flag(tcp_flags::kSyn) || !ack_ok) return;
      rcv_nxt_ = seg.seq + 1;
      snd_una_ = seg.ack;
      peer_window_ = seg.window;
      clear_outstanding(sim);
      state_ = kEstablished;
      sim.progress();
      send_ack(sim);
      pump(sim);
      return;
    }

    if (state_ == kClosedDone) {
      return;
    }

    // Synchronized states.
    const std::uint32_t rcv_wnd = 4096;
    const bool in_window = static_cast<std::uint32_t>(seg.seq - rcv_nxt_) < rcv_wnd;
    if (!in_window) {
      if (!flag(tcp_flags::kRst)) send_ack(sim);
      return;
    }
    if (flag(tcp_flags::kRst)) {
      if (seg.seq == rcv_nxt_) {
        failure = "connection reset by peer";
      } else {
        send_ack(sim);
      }
      return;
    }
    if (flag(tcp_flags::kSyn)) {
      send_reset_for(sim, seg, len);
      failure = "SYN received in window";
      return;
    }
    if (!flag(tcp_flags::kAck)) return;

    if (state_ == kSynRcvd) {
      if (seg.ack != snd_nxt_) {
        send_reset_for(sim, seg, len);
        return;
      }
      state_ = kEstablished;
      sim.progress();
    }
    const std::uint32_t in_flight = snd_nxt_ - snd_una_;
    const std::uint32_t acked = seg.ack - snd_una_;
    if (acked > in_flight) {
      send_ack(sim);
      return;
    }
    if (acked > 0) {
      snd_una_ = seg.ack;
      if (outstanding_ && seg.ack - outstanding_->seq >= outstanding_len_ &&
          seg.ack - outstanding_->seq <= in_flight + outstanding_len_) {
        clear_outstanding(sim);
        sim.progress();
      }
      if (state_ == kLastAck && snd_una_ == snd_nxt_ && fin_sent_) {
        state_ = kClosedDone;
        done = true;
        sim.progress();
        return;
      }
    }
    peer_window_ = seg.window;

    bool need_ack = false;
    if (len > 0) {
      if (seg.seq != rcv_nxt_) {
        send_ack(sim);
        return;
      }
      if (fin_received_) return;
      const auto expected = app_payload(client_ ? 'S' : 'C', received_ + 1);
      if (received_ >= n_ || seg.payload != expected) {
        failure = "corrupted or unexpected application data";
        return;
      }
      ++received_;
      rcv_nxt_ += static_cast<std::uint32_t>(len);
      sim.progress();
      need_ack = true;
    }
    if (flag(tcp_flags::kFin) && seg.seq + static_cast<std::uint32_t>(len) == rcv_nxt_ && !fin_received_) {
      fin_received_ = true;
      rcv_nxt_ += 1;
      sim.progress();
      need_ack = true;
      if (client_) {
        if (state_ != kFinWait || received_ < n_) {
          failure = "peer closed before the transfer finished";
          return;
        }
        send_ack(sim);
        state_ = kTimeWait;
        done = true;
        return;
      }
      if (received_ < n_) {
        failure = "peer closed before the transfer finished";
        return;
      }
      TcpSegment fin = base(tcp_flags::kFin | tcp_flags::kAck);
      fin.seq = snd_nxt_;
      snd_nxt_ += 1;
      fin_sent_ = true;
      state_ = kLastAck;
      transmit_reliable(sim, fin, 1);
      return;
    }
    const bool sent = pump(sim);
    if (need_ack && !sent) send_ack(sim);
  }

 private:
  enum State { kClosed, kListen, kSynSent, kSynRcvd, kEstablished, kFinWait, kTimeWait, kLastAck, kClosedDone };

  TcpSegment base(std::uint8_t flags) const {
    TcpSegment s;
    s.src_port = my_port_;
    s.dst_port = peer_port_;
    s.flags = flags;
    s.window = 4096;
    s.seq = snd_nxt_;
    s.ack = (flags & tcp_flags::kAck) ? rcv_nxt_ : 0;
    return s;
  }

  void send_ack(Sim& sim) {
    TcpSegment a = base(tcp_flags::kAck);
    sim.send(index, serialize_tcp(a));
  }

  void send_reset_for(Sim& sim, const TcpSegment& seg, std::size_t len) {
    TcpSegment r;
    r.src_port = seg.dst_port;
    r.dst_port = seg.src_port;
    if (seg.flags & tcp_flags::kAck) {
      r.seq = seg.ack;
      r.flags = tcp_flags::kRst;
    } else {
      r.seq = 0;
      r.ack = seg.seq + static_cast<std::uint32_t>(len) + ((seg.flags & tcp_flags::kSyn) ? 1 : 0);
      r.flags = tcp_flags::kRst | tcp_flags::kAck;
    }
    sim.send(index, serialize_tcp(r));
  }

  void transmit_reliable(Sim& sim, const TcpSegment& s, std::uint32_t seq_len) {
    outstanding_ = s;
    outstanding_len_ = seq_len;
    retries_ = 0;
    sim.send(index, serialize_tcp(s));
    sim.arm_timer(*this);
  }

  void clear_outstanding(Sim& sim) {
    outstanding_.reset();
    retries_ = 0;
    sim.cancel_timer(*this);
  }

  // Sends the next application segment when it is this side's turn.
  bool pump(Sim& sim) {
    if (outstanding_ || state_ != kEstablished) return false;
    if (client_) {
      if (sent_ < n_ && sent_ == received_) return send_data(sim, 'C');
      if (sent_ == n_ && received_ == n_ && !fin_sent_) {
        TcpSegment fin = base(tcp_flags::kFin | tcp_flags::kAck);
        snd_nxt_ += 1;
        fin_sent_ = true;
        state_ = kFinWait;
        transmit_reliable(sim, fin, 1);
        return true;
      }
      return false;
    }
    if (sent_ < received_) return send_data(sim, 'S');
    return false;
  }

  bool send_data(Sim& sim, char who) {
    TcpSegment d = base(tcp_flags::kPsh | tcp_flags::kAck);
    d.payload = app_payload(who, sent_ + 1);
    ++sent_;
    snd_nxt_ += static_cast<std::uint32_t>(d.payload.size());
    if (peer_window_ < d.payload.size()) {
      // Zero-window style wait: the retransmission timer acts as the probe.
      outstanding_ = d;
      outstanding_len_ = static_cast<std::uint32_t>(d.payload.size());
      retries_ = 0;
      sim.arm_timer(*this);
      return true;
    }
    transmit_reliable(sim, d, static_cast<std::uint32_t>(d.payload.size()));
    return true;
  }

  bool client_;
  int n_;
  int max_retries_;
  std::uint16_t my_port_, peer_port_;
  std::uint32_t iss_, snd_una_, snd_nxt_, rcv_nxt_ = 0;
  std::uint32_t peer_window_ = 4096;
  State state_;
  std::optional<TcpSegment> outstanding_;
  std::uint32_t outstanding_len_ = 0;
  int retries_ = 0;
  int sent_ = 0, received_ = 0;
  bool fin_sent_ = false, fin_received_ = false;
};

// ---------------------------------------------------------------------------
// Toy DCCP

class DccpEndpoint : public Endpoint {
 public:
  DccpEndpoint(bool client, int data_packets, int max_retries)
      : client_(client), n_(data_packets), max_retries_(max_retries) {
    my_port_ = client ? 40001 : 5001;
    peer_port_ = client ? 5001 : 40001;
    iss_ = client ? 1000 : 5000;
    gss_ = iss_ - 1;
    state_ = client ? kClosed : kListen;
  }

  void start(Sim& sim) override {
    if (!client_) return;
    state_ = kRequest;
    Outgoing o;
    o.type = dccp_types::kRequest;
    o.service_code = kServiceCode;
    transmit_reliable(sim, o);
  }

  void on_timer(Sim& sim) override {
    if (!outstanding_) return;
    if (retries_ >= max_retries_) {
      gave_up = true;
      return;
    }
    ++retries_;
    emit(sim, *outstanding_);
    sim.arm_timer(*this);
  }

  void on_packet(Sim& sim, std::vector<std::uint8_t> bytes) override {
    if (bytes.size() < 16) return;
    const std::uint8_t type = (bytes[8] >> 1) & 0x0F;
    const std::uint8_t x = bytes[8] & 1;
    if (x != 1 || type > dccp_types::kSyncAck) return;
    const std::size_t doff = static_cast<std::size_t>(bytes[4]) * 4;
    if (doff < static_cast<std::size_t>(dccp_header_bytes(type)) || doff > bytes.size()) return;
    const std::size_t cscov = bytes[5] & 0x0F;
    if (cscov > 0 && (cscov - 1) * 4 > bytes.size() - doff) return;
    if (dccp_checksum(bytes) != static_cast<std::uint16_t>(bytes[6] << 8 | bytes[7])) return;
    const DccpPacket p = parse_dccp(bytes);

    // Unknown port pair: no connection to reset, so the packet is dropped.
    if (p.dst_port != my_port_ || p.src_port != peer_port_) return;

    if (state_ == kTimeWait) return;
    if (state_ == kServerClosed) {
      if (type != dccp_types::kReset) reset_closed(sim, p);
      return;
    }
    if (state_ == kListen) {
      if (type == dccp_types::kReset) return;
      if (type != dccp_types::kRequest) {
        reset_closed(sim, p);
        return;
      }
      gsr_ = p.seq;
      have_gsr_ = true;
      state_ = kRespond;
      sim.progress();
      send_response(sim);
      return;
    }
    if (state_ == kRequest) {
      const bool ack_ok = p.ack && ack_valid(*p.ack);
      if (type == dccp_types::kReset && ack_ok) {
        failure = "connection refused";
        return;
      }
      if (type != dccp_types::kResponse || !ack_ok) return;
      gsr_ = p.seq;
      have_gsr_ = true;
      clear_outstanding(sim);
      state_ = kPartOpen;
      sim.progress();
      Outgoing a;
      a.type = dccp_types::kAck;
      emit(sim, a);
      pump(sim);
      return;
    }

    // Synchronized states: Respond, PartOpen, Open, Closing.
    if (type == dccp_types::kSync || type == dccp_types::kSyncAck) {
      if (!p.ack || !ack_valid(*p.ack)) return;
      gsr_ = p.seq;
      if (type == dccp_types::kSync) {
        Outgoing s;
        s.type = dccp_types::kSyncAck;
        s.ack_override = p.seq;
        emit(sim, s);
      }
      return;
    }
    const std::int64_t d = delta48(p.seq, gsr_);
    if (!(d > -25 && d <= 75)) {
      if (type != dccp_types::kReset) {
        Outgoing s;
        s.type = dccp_types::kSync;
        s.ack_override = p.seq;
        emit(sim, s);
      }
      return;
    }
    if (p.ack && !ack_valid(*p.ack)) return;
    if (d > 0) gsr_ = p.seq;

    if (type == dccp_types::kReset) {
      if (client_ && state_ == kClosing) {
        state_ = kTimeWait;
        clear_outstanding(sim);
        done = true;
        sim.progress();
      } else {
        failure = "connection reset by peer";
      }
      return;
    }

    if (p.ack && outstanding_ && delta48(*p.ack, outstanding_first_seq_) >= 0) {
      clear_outstanding(sim);
      sim.progress();
    }

    if (!client_ && state_ == kRespond) {
      if (type == dccp_types::kRequest) {
        send_response(sim);
        return;
      }
      if (type == dccp_types::kAck || type == dccp_types::kDataAck) {
        state_ = kOpen;
        sim.progress();
      }
    }
    if (client_ && state_ == kPartOpen) {
      if (type == dccp_types::kResponse) {
        Outgoing a;
        a.type = dccp_types::kAck;
        emit(sim, a);
        return;
      }
      if (type == dccp_types::kData || type == dccp_types::kDataAck || type == dccp_types::kAck) {
        state_ = kOpen;
        sim.progress();
      }
    }

    bool need_ack = false;
    if ((type == dccp_types::kData || type == dccp_types::kDataAck) && !p.payload.empty()) {
      const int k = p.payload[0] == (client_ ? 'S' : 'C') ? p.payload.size() > 1 ? p.payload[1] : 0 : -1;
      if (k == received_ + 1) {
        if (p.payload != app_payload(client_ ? 'S' : 'C', k) || received_ >= n_) {
          failure = "corrupted or unexpected application data";
          return;
        }
        ++received_;
        sim.progress();
        need_ack = true;
      } else if (k >= 1 && k <= received_) {
        need_ack = true;
      } else {
        failure = "corrupted or unexpected application data";
        return;
      }
    }

    if (type == dccp_types::kClose) {
      if (client_) return;
      if (received_ < n_) {
        failure = "peer closed before the transfer finished";
        return;
      }
      Outgoing r;
      r.type = dccp_types::kReset;
      r.reset_code = 1;
      emit(sim, r);
      clear_outstanding(sim);
      state_ = kServerClosed;
      done = true;
      sim.progress();
      return;
    }

    const bool sent = pump(sim);
    if (need_ack && !sent) {
      Outgoing a;
      a.type = dccp_types::kAck;
      emit(sim, a);
    }
  }

 private:
  enum State { kClosed, kListen, kRequest, kRespond, kPartOpen, kOpen, kClosing, kTimeWait, kServerClosed };
  static constexpr std::uint32_t kServiceCode = 0x50524F54;

  struct Outgoing {
    std::uint8_t type = 0;
    std::vector<std::uint8_t> payload;
    std::optional<std::uint32_t> service_code;
    std::optional<std::uint8_t> reset_code;
    std::optional<std::uint64_t> ack_override;
  };

  bool ack_valid(std::uint64_t ack) const {
    return delta48(ack, iss_) >= 0 && delta48(ack, gss_) <= 0;
  }

  // Every DCCP packet, retransmissions included, takes a fresh sequence number.
  std::uint64_t emit(Sim& sim, const Outgoing& o) {
    DccpPacket p;
    p.src_port = my_port_;
    p.dst_port = peer_port_;
    p.type = o.type;
    gss_ = (gss_ + 1) & kSeqMask48;
    p.seq = gss_;
    if (o.type != dccp_types::kRequest && o.type != dccp_types::kData)
      p.ack = o.ack_override ? *o.ack_override : gsr_;
    p.service_code = o.service_code;
    p.reset_code = o.reset_code;
    p.payload = o.payload;
    sim.send(index, serialize_dccp(p));
    return p.seq;
  }

  void transmit_reliable(Sim& sim, const Outgoing& o) {
    outstanding_ = o;
    retries_ = 0;
    outstanding_first_seq_ = emit(sim, o);
    sim.arm_timer(*this);
  }

  void clear_outstanding(Sim& sim) {
    outstanding_.reset();
    retries_ = 0;
    sim.cancel_timer(*this);
  }

  void send_response(Sim& sim) {
    Outgoing r;
    r.type = dccp_types::kResponse;
    r.service_code = kServiceCode;
    emit(sim, r);
  }

  void reset_closed(Sim& sim, const DccpPacket& p) {
    Outgoing r;
    r.type = dccp_types::kReset;
    r.reset_code = 3;
    r.ack_override = p.seq;
    if (!have_gsr_) gsr_ = p.seq;
    emit(sim, r);
  }

  bool pump(Sim& sim) {
    if (outstanding_) return false;
    if (client_) {
      if (state_ != kPartOpen && state_ != kOpen) return false;
      if (sent_ < n_ && sent_ == received_) {
        Outgoing d;
        d.type = dccp_types::kDataAck;
        d.payload = app_payload('C', ++sent_);
        transmit_reliable(sim, d);
        return true;
      }
      if (sent_ == n_ && received_ == n_) {
        Outgoing c;
        c.type = dccp_types::kClose;
        state_ = kClosing;
        transmit_reliable(sim, c);
        return true;
      }
      return false;
    }
    if (state_ != kOpen) return false;
    if (sent_ < received_) {
      Outgoing d;
      d.type = dccp_types::kDataAck;
      d.payload = app_payload('S', ++sent_);
      transmit_reliable(sim, d);
      return true;
    }
    return false;
  }

  bool client_;
  int n_;
  int max_retries_;
  std::uint16_t my_port_, peer_port_;
  std::uint64_t iss_, gss_, gsr_ = 0;
  bool have_gsr_ = false;
  State state_;
  std::optional<Outgoing> outstanding_;
  std::uint64_t outstanding_first_seq_ = 0;
  int retries_ = 0;
  int sent_ = 0, received_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ToyProtocol p) { return p == ToyProtocol::kTCP ? "tcp" : "dccp"; }

std::optional<ToyProtocol> parse_toy_protocol(std::string_view s) {
  const auto l = text::to_lower(s);
  if (l == "tcp") return ToyProtocol::kTCP;
  if (l == "dccp") return ToyProtocol::kDCCP;
  return std::nullopt;
}

int fixed_header_bits(ToyProtocol p) { return p == ToyProtocol::kTCP ? 160 : 128; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kCompleted: return "completed";
    case Verdict::kStalled: return "stalled";
    case Verdict::kFailed: return "failed";
  }
  return "?";
}

std::uint64_t read_bits(std::span<const std::uint8_t> bytes, int offset_bits, int size_bits) {
  std::uint64_t v = 0;
  for (int i = 0; i < size_bits; ++i) {
    const int bit = offset_bits + i;
    const std::uint8_t byte = bytes[static_cast<std::size_t>(bit / 8)];
    v = (v << 1) | ((byte >> (7 - bit % 8)) & 1u);
  }
  return v;
}

void write_bits(std::span<std::uint8_t> bytes, int offset_bits, int size_bits, std::uint64_t value) {
  for (int i = 0; i < size_bits; ++i) {
    const int bit = offset_bits + i;
    const std::uint8_t m = static_cast<std::uint8_t>(1u << (7 - bit % 8));
    const bool on = (value >> (size_bits - 1 - i)) & 1u;
    auto& byte = bytes[static_cast<std::size_t>(bit / 8)];
    byte = on ? static_cast<std::uint8_t>(byte | m) : static_cast<std::uint8_t>(byte & ~m);
  }
}

std::vector<std::uint8_t> serialize_tcp(const TcpSegment& s, bool fill_checksum) {
  std::vector<std::uint8_t> b(20, 0);
  put16(b, 0, s.src_port);
  put16(b, 2, s.dst_port);
  write_bits(b, 32, 32, s.seq);
  write_bits(b, 64, 32, s.ack);
  write_bits(b, 96, 4, s.data_offset);
  write_bits(b, 100, 6, s.reserved);
  write_bits(b, 106, 6, s.flags);
  put16(b, 14, s.window);
  put16(b, 16, fill_checksum ? 0 : s.checksum);
  put16(b, 18, s.urgent);
  b.insert(b.end(), s.payload.begin(), s.payload.end());
  if (fill_checksum) put16(b, 16, internet_checksum(b));
  return b;
}

TcpSegment parse_tcp(std::span<const std::uint8_t> b) {
  if (b.size() < 20) throw Error(ErrorKind::kSyntax, "TCP segment shorter than 20 bytes");
  TcpSegment s;
  s.src_port = static_cast<std::uint16_t>(read_bits(b, 0, 16));
  s.dst_port = static_cast<std::uint16_t>(read_bits(b, 16, 16));
  s.seq = static_cast<std::uint32_t>(read_bits(b, 32, 32));
  s.ack = static_cast<std::uint32_t>(read_bits(b, 64, 32));
  s.data_offset = static_cast<std::uint8_t>(read_bits(b, 96, 4));
  s.reserved = static_cast<std::uint8_t>(read_bits(b, 100, 6));
  s.flags = static_cast<std::uint8_t>(read_bits(b, 106, 6));
  s.window = static_cast<std::uint16_t>(read_bits(b, 112, 16));
  s.checksum = static_cast<std::uint16_t>(read_bits(b, 128, 16));
  s.urgent = static_cast<std::uint16_t>(read_bits(b, 144, 16));
  const std::size_t start = std::clamp<std::size_t>(static_cast<std::size_t>(s.data_offset) * 4, 20, b.size());
  s.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(start), b.end());
  return s;
}

std::string tcp_packet_name(std::span<const std::uint8_t> b) {
  if (b.size() < 20) return "RUNT";
  const std::uint8_t f = b[13] & 0x3F;
  const std::size_t header = std::clamp<std::size_t>(static_cast<std::size_t>(b[12] >> 4) * 4, 20, b.size());
  if (f & tcp_flags::kRst) return "RST";
  if ((f & tcp_flags::kSyn) && (f & tcp_flags::kAck)) return "SYN-ACK";
  if (f & tcp_flags::kSyn) return "SYN";
  if (f & tcp_flags::kFin) return "FIN";
  if (b.size() > header) return "DATA";
  if (f & tcp_flags::kAck) return "ACK";
  return "NONE";
}

std::string_view dccp_type_name(std::uint8_t type) {
  static const char* names[] = {"Request", "Response", "Data", "Ack",  "DataAck",
                                "CloseReq", "Close",   "Reset", "Sync", "SyncAck"};
  return type < 10 ? names[type] : "Reserved";
}

int dccp_header_bytes(std::uint8_t type) {
  switch (type) {
    case dccp_types::kRequest: return 20;
    case dccp_types::kData: return 16;
    case dccp_types::kResponse: return 28;
    case dccp_types::kReset: return 28;
    default: return 24;
  }
}

std::vector<std::uint8_t> serialize_dccp(const DccpPacket& p, bool fill_checksum) {
  std::vector<std::uint8_t> b(16, 0);
  put16(b, 0, p.src_port);
  put16(b, 2, p.dst_port);
  write_bits(b, 40, 4, p.ccval);
  write_bits(b, 44, 4, p.cscov);
  put16(b, 6, fill_checksum ? 0 : p.checksum);
  write_bits(b, 64, 3, p.res);
  write_bits(b, 67, 4, p.type);
  write_bits(b, 71, 1, p.x);
  write_bits(b, 72, 8, p.reserved);
  write_bits(b, 80, 48, p.seq & kSeqMask48);
  if (p.ack) {
    b.resize(24, 0);
    write_bits(b, 144, 48, *p.ack & kSeqMask48);
  }
  if (p.service_code) {
    const std::size_t at = b.size();
    b.resize(at + 4, 0);
    write_bits(b, static_cast<int>(at * 8), 32, *p.service_code);
  }
  if (p.reset_code) {
    b.push_back(*p.reset_code);
    b.push_back(0);
    b.push_back(0);
    b.push_back(0);
  }
  b[4] = fill_checksum ? static_cast<std::uint8_t>(b.size() / 4) : p.data_offset;
  b.insert(b.end(), p.payload.begin(), p.payload.end());
  if (fill_checksum) put16(b, 6, dccp_checksum(b));
  return b;
}

DccpPacket parse_dccp(std::span<const std::uint8_t> b) {
  if (b.size() < 16) throw Error(ErrorKind::kSyntax, "DCCP packet shorter than 16 bytes");
  DccpPacket p;
  p.src_port = static_cast<std::uint16_t>(read_bits(b, 0, 16));
  p.dst_port = static_cast<std::uint16_t>(read_bits(b, 16, 16));
  p.data_offset = b[4];
  p.ccval = static_cast<std::uint8_t>(read_bits(b, 40, 4));
  p.cscov = static_cast<std::uint8_t>(read_bits(b, 44, 4));
  p.checksum = static_cast<std::uint16_t>(read_bits(b, 48, 16));
  p.res = static_cast<std::uint8_t>(read_bits(b, 64, 3));
  p.type = static_cast<std::uint8_t>(read_bits(b, 67, 4));
  p.x = static_cast<std::uint8_t>(read_bits(b, 71, 1));
  p.reserved = static_cast<std::uint8_t>(read_bits(b, 72, 8));
  p.seq = read_bits(b, 80, 48);
  std::size_t at = 16;
  const bool has_ack = p.type != dccp_types::kRequest && p.type != dccp_types::kData;
  if (has_ack && b.size() >= 24) {
    p.ack = read_bits(b, 144, 48);
    at = 24;
  }
  if ((p.type == dccp_types::kRequest || p.type == dccp_types::kResponse) && b.size() >= at + 4) {
    p.service_code = static_cast<std::uint32_t>(read_bits(b, static_cast<int>(at * 8), 32));
    at += 4;
  }
  if (p.type == dccp_types::kReset && b.size() >= at + 4) {
    p.reset_code = b[at];
    at += 4;
  }
  const std::size_t start = std::clamp<std::size_t>(static_cast<std::size_t>(p.data_offset) * 4, at, b.size());
  p.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(start), b.end());
  return p;
}

std::uint16_t dccp_checksum(std::span<const std::uint8_t> b) {
  std::vector<std::uint8_t> copy(b.begin(), b.end());
  if (copy.size() >= 8) copy[6] = copy[7] = 0;
  std::size_t covered = copy.size();
  if (copy.size() >= 6) {
    const std::size_t cscov = copy[5] & 0x0F;
    if (cscov > 0) covered = std::min(copy.size(), static_cast<std::size_t>(copy[4]) * 4 + (cscov - 1) * 4);
  }
  return internet_checksum(std::span<const std::uint8_t>(copy.data(), covered));
}

std::string dccp_packet_name(std::span<const std::uint8_t> b) {
  if (b.size() < 16) return "RUNT";
  return std::string(dccp_type_name((b[8] >> 1) & 0x0F));
}

void check_grammar_for_protocol(ToyProtocol protocol, const ProtocolGrammar& g) {
  if (!text::equals_ci(g.protocol, to_string(protocol)))
    throw Error(ErrorKind::kConfiguration, "grammar describes '" + g.protocol + "' but the simulated protocol is '" +
                                               std::string(to_string(protocol)) + "'");
  const GrammarField* f = g.field_with(PropertyKind::kPacketType);
  if (f && (!f->offset_bits || *f->offset_bits + *f->size_bits > fixed_header_bits(protocol)))
    throw Error(ErrorKind::kConfiguration, "PacketType field '" + f->name + "' lies outside the " +
                                               std::to_string(fixed_header_bits(protocol)) + "-bit fixed header");
}

RunResult run_strategy(ToyProtocol protocol, const TestStrategy& strategy, const ProtocolGrammar& grammar,
                       const SimOptions& options) {
  check_grammar_for_protocol(protocol, grammar);
  if (strategy.target && !grammar.field_with(PropertyKind::kPacketType))
    throw Error(ErrorKind::kConfiguration, "strategy targets a packet type but the grammar has no PacketType field");
  Proxy proxy(protocol, strategy, grammar);
  Sim sim(options, proxy);
  std::unique_ptr<Endpoint> client, server;
  if (protocol == ToyProtocol::kTCP) {
    client = std::make_unique<TcpEndpoint>(true, options.data_packets, options.max_retries);
    server = std::make_unique<TcpEndpoint>(false, options.data_packets, options.max_retries);
  } else {
    client = std::make_unique<DccpEndpoint>(true, options.data_packets, options.max_retries);
    server = std::make_unique<DccpEndpoint>(false, options.data_packets, options.max_retries);
  }
  RunResult r = sim.run(*client, *server);
  r.strategy_id = strategy.id;
  r.attack = detect_attack(r, strategy);
  return r;
}

std::optional<AttackReport> detect_attack(const RunResult& result, const TestStrategy& strategy) {
  if (result.verdict == Verdict::kCompleted) return std::nullopt;
  AttackReport a;
  a.strategy_id = strategy.id;
  a.off_path = std::holds_alternative<Inject>(strategy.action);
  a.verdict = result.verdict;
  a.trace = result.trace;
  return a;
}

Coverage coverage(const std::vector<RunResult>& results) {
  std::set<PacketTypeTrace> traces;
  for (const auto& r : results) traces.insert(r.trace);
  return {traces.size(), results.size()};
}

std::string run_log_json(const std::vector<RunResult>& results, const std::vector<TestStrategy>& strategies) {
  std::map<int, const TestStrategy*> by_id;
  for (const auto& s : strategies) by_id[s.id] = &s;
  std::string out;
  for (const auto& r : results) {
    nlohmann::json j{{"strategy", r.strategy_id},
                     {"verdict", std::string(to_string(r.verdict))},
                     {"reason", r.reason},
                     {"events", r.events_used},
                     {"trace", r.trace},
                     {"modified_packets", r.proxy.packets_modified},
                     {"checksum_inconsistent", r.proxy.checksum_inconsistent}};
    if (const auto it = by_id.find(r.strategy_id); it != by_id.end()) {
      j["action"] = describe_action(it->second->action);
      if (it->second->target) j["target"] = it->second->target->name;
    }
    if (r.attack)
      j["attack"] = {{"class", r.attack->attack_class}, {"path", r.attack->off_path ? "off-path" : "on-path"}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace protogram
