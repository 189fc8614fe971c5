"""The benchmark systems used across the test suite, built directly."""

from polyrecast.hybrid import ContinuousSystem, HybridSystem, Transition
from polyrecast.parser import parse, parse_predicate
from polyrecast.recast import OdeSystem


def planar_drift():
    """Planar system with exponential and squared-sine drift; initial disc,
    box domain, unsafe disc."""
    variables = ["x", "y"]
    field = OdeSystem(variables, {"x": parse("e^(-x) + y - 1"), "y": parse("-sin(x)^2")})
    cs = ContinuousSystem(
        variables,
        init=parse_predicate("(x + 0.5)^2 + (y - 0.5)^2 - 0.16 <= 0"),
        field=field,
        domain=parse_predicate("-2 <= x & x <= 2 & -2 <= y & y <= 2"),
    )
    unsafe = parse_predicate("(x - 0.7)^2 + (y + 0.7)^2 - 0.09 <= 0")
    return cs, unsafe


def bouncing_ball():
    """Ball bouncing elastically on the surface y = sin(x)."""
    variables = ["x", "y", "vx", "vy"]
    field = OdeSystem(
        variables,
        {"x": parse("vx"), "y": parse("vy"), "vx": parse("0"), "vy": parse("-9.8")},
    )
    cs = ContinuousSystem(
        variables,
        init=parse_predicate("x = 0 & 4.9 <= y & y <= 5.1 & vx = -1 & vy = 0"),
        field=field,
        domain=parse_predicate("y - sin(x) >= 0"),
    )
    bounce = Transition(
        "ball",
        "ball",
        parse_predicate("y - sin(x) = 0"),
        {
            "vx": parse("(sin(x)^2*vx + 2*cos(x)*vy)/(1 + cos(x)^2)"),
            "vy": parse("(2*cos(x)*vx - sin(x)^2*vy)/(1 + cos(x)^2)"),
        },
    )
    return HybridSystem(variables, {"ball": cs}, [bounce], name="bouncing_ball")


def hiv_transmission():
    """Compartment model with a shared reciprocal of the total population."""
    variables = ["u1", "u2", "u3"]
    field = OdeSystem(
        variables,
        {
            "u1": parse("-2*u1*u2/(u1+u2+u3) - 0.008*u1"),
            "u2": parse("2*u1*u2/(u1+u2+u3) - (0.008+0.1)*u2"),
            "u3": parse("0.1*u2 - 0.95*u3"),
        },
    )
    cs = ContinuousSystem(
        variables,
        init=parse_predicate(
            "9.985 <= u1 & u1 <= 9.995 & 0.005 <= u2 & u2 <= 0.015 & 0 <= u3 & u3 <= 0.003"
        ),
        field=field,
        domain=parse_predicate(
            "u1 >= 0 & u2 >= 0 & u3 >= 0 & u1 + u2 + u3 > 0 & u1 + u2 + u3 <= 10.013"
        ),
    )
    unsafe = parse_predicate("u3 - 1 >= 0")
    return cs, unsafe


def two_tanks():
    """Two coupled tanks switching when the second level reaches 1."""
    variables = ["x1", "x2"]
    f1 = OdeSystem(variables, {"x1": parse("1 - sqrt(x1)"), "x2": parse("sqrt(x1) - 1.5")})
    f2 = OdeSystem(
        variables,
        {"x1": parse("1 - sqrt(x1 - x2 + 1)"), "x2": parse("sqrt(x1 - x2 + 1) - 1.5")},
    )
    q1 = ContinuousSystem(
        variables,
        init=parse_predicate("5.25 <= x1 & x1 <= 5.75 & 0 <= x2 & x2 <= 0.5"),
        field=f1,
        domain=parse_predicate("x2 <= 1 & x1 >= 0.01"),
    )
    q2 = ContinuousSystem(
        variables,
        init=parse_predicate("false"),
        field=f2,
        domain=parse_predicate("x2 >= 1 & x1 - x2 + 1 >= 0.01"),
    )
    up = Transition("q1", "q2", parse_predicate("x2 - 1 = 0"))
    down = Transition("q2", "q1", parse_predicate("x2 - 1 = 0"))
    unsafe = {"q1": parse_predicate("(x1 - 4.25)^2 + (x2 - 0.25)^2 - 0.0625 <= 0")}
    return HybridSystem(variables, {"q1": q1, "q2": q2}, [up, down], name="two_tanks"), unsafe


def lunar_lander():
    """Sampled-data thrust control of a descent at target velocity -2 m/s.

    Thrust is recomputed every 0.128 s from the control law and held
    between samples; the clock t is reset at each sampling instant."""
    variables = ["v", "m", "Fc", "t"]
    field = OdeSystem(
        variables,
        {
            "v": parse("Fc/m - 1.622"),
            "m": parse("-Fc/2500"),
            "Fc": parse("0"),
            "t": parse("1"),
        },
    )
    cs = ContinuousSystem(
        variables,
        init=parse_predicate("v = -2 & m = 1250 & Fc = 2027.5 & t = 0"),
        field=field,
        domain=parse_predicate("t <= 0.128 & m >= 5"),
    )
    sample = Transition(
        "descend",
        "descend",
        parse_predicate("t - 0.128 = 0"),
        {
            "t": parse("0"),
            "Fc": parse("m*(1.622 - 0.01*(Fc/m - 1.622) - 0.6*(v + 2))"),
        },
    )
    unsafe = {"descend": parse_predicate("(v + 2)^2 - 0.0025 >= 0")}
    return HybridSystem(variables, {"descend": cs}, [sample], name="lunar_lander"), unsafe


UNIVARIATE_RECASTS = {
    "reciprocal": ("1/x", {"x": (0.5, 1.5)}),
    "square_root": ("sqrt(x)", {"x": (0.5, 1.5)}),
    "exponential": ("e^(x)", {"x": (-3.0, -2.0)}),
    "logarithm": ("ln(x)", {"x": (1.5, 2.5)}),
    "sine": ("sin(x)", {"x": (0.5, 2.0)}),
    "cosine": ("cos(x)", {"x": (0.5, 2.0)}),
    "log_composition": ("ln(2 + sin(x))", {"x": (0.0, 1.0)}),
}


def univariate_system(name):
    text, init_box = UNIVARIATE_RECASTS[name]
    return OdeSystem(["x"], {"x": parse(text)}), init_box
