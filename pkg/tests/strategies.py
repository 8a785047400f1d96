"""Hypothesis strategies for small role-annotated DAGs."""

from hypothesis import strategies as st

from tdadjust.graph import Dag, Role


@st.composite
def longitudinal_dags(draw, max_p=2, max_cov=2, max_extra=8):
    """Random DAG with p+1 treatments, covariates per time and one outcome."""
    p = draw(st.integers(0, max_p))
    roles = {}
    order = []
    for k in range(p + 1):
        for j in range(1, draw(st.integers(0, max_cov)) + 1):
            name = f"C{k}{j}"
            roles[name] = Role("covariate", k, j)
            order.append(name)
        roles[f"A{k}"] = Role("treatment", k)
        order.append(f"A{k}")
    roles["Y"] = Role("outcome")
    order.append("Y")
    edges = {(f"A{p}", "Y")}
    pairs = [(order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order))]
    if pairs:
        extra = draw(st.lists(st.sampled_from(pairs), max_size=max_extra, unique=True))
        edges |= set(extra)
    return Dag(roles, edges)
