import numpy as np
import pytest

from churn_intent.datasets import LabeledExample


def write_embedding_file(path, rows, dim=None):
    """rows: list of (word, vector) pairs."""
    dim = dim if dim is not None else len(rows[0][1])
    lines = [f"{len(rows)} {dim}"]
    for word, vec in rows:
        lines.append(word + " " + " ".join(repr(float(v)) for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def tiny_emb_file(tmp_path):
    return write_embedding_file(
        tmp_path / "vec.txt",
        [("hello", [1.0, 0.0, 0.0]), ("bye", [0.0, 1.0, 0.0])],
    )


def example(
    id="x1",
    text="i want out",
    brand=None,
    label="churn",
    confidence=1.0,
    language="en",
    medium="twitter",
):
    return LabeledExample(
        id=id, raw_text=text, source_brand=brand, label=label,
        confidence=confidence, language=language, medium=medium,
    )


def write_dataset_csv(path, rows):
    """rows: list of dicts with the CSV schema columns."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["id", "text", "brand", "label", "confidence",
                            "language", "medium"])
        writer.writeheader()
        writer.writerows(rows)
    return path


def finite_difference_grads(f, arrays, h=1e-5):
    """Central finite differences of scalar-valued f() wrt each array, in place."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = arr[i]
            arr[i] = orig + h
            fp = f()
            arr[i] = orig - h
            fm = f()
            arr[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads
