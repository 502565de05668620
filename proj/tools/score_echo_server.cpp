// Reference score server: validates request frames and returns zero epsilon
// tensors. Useful for exercising the remote-provider path end to end.
// With --reject it answers 404 instead, to exercise client-side error paths.
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "splatgen/remote.hpp"

int main(int argc, char** argv) {
    int port = 8787;
    bool reject = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--reject") == 0)
            reject = true;
        else
            port = std::atoi(argv[i]);
    }
    if (port <= 0 || port > 65535) {
        std::cerr << "usage: score_echo_server [port] [--reject]\n";
        return 2;
    }
    httplib::Server server;
    if (reject) {
        server.Post("/v1/score", [](const httplib::Request&, httplib::Response& res) {
            res.status = 404;
            res.set_content("scoring disabled", "text/plain");
        });
    } else {
        splatgen::serve_echo_scores(server);
    }
    std::cout << "listening on 0.0.0.0:" << port << "\n";
    if (!server.listen("0.0.0.0", port)) {
        std::cerr << "error: cannot bind port " << port << "\n";
        return 3;
    }
    return 0;
}
