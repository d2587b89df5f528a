#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "acs/backend.hpp"

namespace acs {

// Line protocol for bridging a backend across a byte stream, e.g. to an
// external inference process. One request per line:
//
//   hello                 -> ok <name> <vocab_size> <hidden_dim>
//   step <id> <id> ...    -> ok <p_0> ... <p_{V-1}> <h_0> ... <h_{D-1}>
//   stepb <id> <id> ...   -> okb <nbytes>\n followed by nbytes of raw
//                            little-endian float32: the V probabilities
//                            first, then the D representation values
//   bye                   -> (connection closes)
//
// Text floats are printed with "%.17g" so doubles round-trip exactly; the
// binary form carries float32 precision. Failures answer "err <message>".
namespace wire {

std::string encode_step_request(std::span<const TokenId> context, bool binary);

// Serves one request line. Returns false once the peer said "bye".
bool handle_request_line(const Backend & backend, const std::string & line, std::ostream & out);

std::string format_hello_response(const BackendDescriptor & desc);
std::string format_step_response_text(const StepOutput & out);
std::string format_step_payload_binary(const StepOutput & out);

BackendDescriptor parse_hello_response(const std::string & line);
StepOutput parse_step_response_text(const std::string & line, std::size_t vocab_size,
                                    std::size_t hidden_dim);
StepOutput decode_step_payload_binary(std::string_view payload, std::size_t vocab_size,
                                      std::size_t hidden_dim);

} // namespace wire

// Reads request lines from `in` until EOF or "bye", answering on `out`.
void serve_backend(const Backend & backend, std::istream & in, std::ostream & out);

// Transport used by StreamBackend: a line-oriented duplex channel.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    virtual void send_line(const std::string & line) = 0;
    virtual std::string recv_line() = 0; // without the trailing newline
    virtual void recv_bytes(void * dst, std::size_t n) = 0;
};

// Answers every request in-process against a wrapped backend. Exercises the
// full encode/serve/decode path without a subprocess.
std::unique_ptr<LineChannel> make_loopback_channel(const Backend & backend);

// Spawns `command` via /bin/sh and speaks the protocol over its stdio.
std::unique_ptr<LineChannel> make_pipe_channel(const std::string & command);

// Client side of the protocol; performs the hello handshake on construction.
class StreamBackend final : public Backend {
public:
    explicit StreamBackend(std::unique_ptr<LineChannel> channel, bool binary = false);

    const BackendDescriptor & descriptor() const override { return desc_; }
    StepOutput step(std::span<const TokenId> context) const override;

private:
    std::unique_ptr<LineChannel> channel_;
    BackendDescriptor desc_;
    bool binary_;
};

} // namespace acs
