"""Regenerates the environment golden trajectories.

Independent transcription of the four classic-control step functions (plain
floats, no shared code with the C++ library). Run from this directory:

    python3 generate.py
"""

import math

FMT = "%.17g"


def write(name, header, rows):
    with open(name, "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(FMT % v if isinstance(v, float) else str(v) for v in r) + "\n")


def cartpole_step(s, force, damping_cart=0.0, damping_pole=0.0):
    g, mc, mp, l, dt = 9.8, 1.0, 0.1, 0.5, 0.02
    x, xd, th, thd = s
    total = mc + mp
    c = (force - damping_cart * xd + l * thd * thd * math.sin(th)) / total
    thacc = (g * math.sin(th) - math.cos(th) * c - damping_pole * thd / (mp * l)) / (
        l * (4.0 / 3.0 - mp * math.cos(th) ** 2 / total)
    )
    xacc = c - l * thacc * math.cos(th) / total
    xd = xd + dt * xacc
    thd = thd + dt * thacc
    return [x + dt * xd, xd, th + dt * thd, thd]


def cartpole():
    s = [0.01, -0.02, 0.03, -0.01]
    rows = []
    for t in range(40):
        a = 0 if (7 * t) % 3 == 0 else 1
        s = cartpole_step(s, 10.0 if a == 1 else -10.0)
        done = int(abs(s[0]) > 2.4 or abs(s[2]) > 12 * 2 * math.pi / 360)
        rows.append([t, float(a)] + s + [done])
    write("cartpole.csv", ["step", "action", "x", "x_dot", "theta", "theta_dot", "done"], rows)


def inverted_pendulum():
    s = [0.0, 0.0, 0.02, 0.0]
    rows = []
    for t in range(40):
        a = 12.0 * math.sin(0.3 * t)
        s = cartpole_step(s, max(-10.0, min(10.0, a)), 0.1, 0.05)
        done = int(abs(s[0]) > 2.4 or abs(s[2]) > 0.2)
        rows.append([t, a] + s + [done])
    write("inverted_pendulum.csv", ["step", "action", "x", "x_dot", "theta", "theta_dot", "done"], rows)


def mountain_car():
    pos, vel = -0.5, 0.0
    rows = []
    for t in range(300):
        # Energy pumping with an over-range command to exercise the clamp.
        a = 1.5 if vel >= 0.0 else -1.5
        force = max(-1.0, min(1.0, a))
        vel += force * 0.0015 - 0.0025 * math.cos(3 * pos)
        vel = max(-0.07, min(0.07, vel))
        pos += vel
        pos = max(-1.2, min(0.6, pos))
        if pos == -1.2 and vel < 0:
            vel = 0.0
        done = int(pos >= 0.45 and vel >= 0.0)
        reward = -0.1 * force * force + (100.0 if done else 0.0)
        rows.append([t, a, pos, vel, reward, done])
        if done:
            break
    write("mountain_car.csv", ["step", "action", "position", "velocity", "reward", "done"], rows)


def pendulum():
    th, thd = 2.5, 0.3
    rows = []
    for t in range(200):
        a = 2.5 if thd >= 0.0 else -2.5
        u = max(-2.0, min(2.0, a))
        ang = ((th + math.pi) % (2 * math.pi)) - math.pi
        reward = -(ang * ang + 0.1 * thd * thd + 0.001 * u * u)
        thd = thd + (3 * 10.0 / 2.0 * math.sin(th) + 3.0 * u) * 0.05
        thd = max(-8.0, min(8.0, thd))
        th = th + thd * 0.05
        rows.append([t, a, th, thd, reward])
    write("pendulum.csv", ["step", "action", "theta", "theta_dot", "reward"], rows)


if __name__ == "__main__":
    cartpole()
    inverted_pendulum()
    mountain_car()
    pendulum()
