"""Shared fixtures: deterministic git repositories and synthetic corpora."""

from __future__ import annotations

import subprocess
from pathlib import Path

import pytest

from synth import make_synthetic_pairs, make_overfit_pairs  # noqa: F401

GIT_ENV = {
    "GIT_AUTHOR_NAME": "Fixture Author",
    "GIT_AUTHOR_EMAIL": "fixture@example.com",
    "GIT_COMMITTER_NAME": "Fixture Author",
    "GIT_COMMITTER_EMAIL": "fixture@example.com",
    "HOME": "/tmp",
    "GIT_CONFIG_NOSYSTEM": "1",
}


class RepoBuilder:
    """Thin deterministic wrapper over git for building fixture histories."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self._tick = 0
        self._run("init", "-q", "-b", "main")

    def _run(self, *args: str) -> None:
        self._tick += 1
        env = dict(GIT_ENV)
        stamp = f"2020-01-01T00:{self._tick // 60:02d}:{self._tick % 60:02d} +0000"
        env["GIT_AUTHOR_DATE"] = stamp
        env["GIT_COMMITTER_DATE"] = stamp
        subprocess.run(
            ["git", "-C", str(self.path), *args],
            env=env, check=True, capture_output=True,
        )

    def commit(self, message: str, files: dict[str, str]) -> None:
        for rel, text in files.items():
            target = self.path / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        self._run("add", "-A")
        self._run("commit", "-q", "--allow-empty", "-m", message)


JAVA_FILE_V0 = """\
package demo;

public class Main {
    static int limit = 10;

    public static int clamp(int value) {
        if (value >= limit) {
            return limit;
        }
        return value;
    }

    public static void main(String[] args) {
        System.out.println(clamp(42));
    }
}
"""


@pytest.fixture
def fixture_repo(tmp_path: Path) -> Path:
    """One repository with exactly one qualifying single-line fix commit."""
    repo = RepoBuilder(tmp_path / "acme__demo")
    repo.commit("initial import", {"src/Main.java": JAVA_FILE_V0})
    # qualifying: fix keyword + exactly one changed line
    repo.commit(
        "Fix off-by-one in clamp",
        {"src/Main.java": JAVA_FILE_V0.replace("value >= limit", "value > limit")},
    )
    # not a fix message
    repo.commit(
        "Refactor formatting only",
        {"src/Main.java": JAVA_FILE_V0.replace("value > limit", "value  >  limit")},
    )
    return repo.path


def build_pipeline_repos(root: Path, n_repos: int = 20, fixes_per_repo: int = 2) -> Path:
    """One org per repo, ``fixes_per_repo`` qualifying commits each.

    Offsets are org-unique (r*10+f) so no two repos produce the same
    (bug, patch) token pair and test-set dedup keeps everything. With 20
    orgs of 2 pairs, the 90/5/5 quotas land exactly on org boundaries.
    """
    repos_dir = root / "repos"
    for r in range(n_repos):
        repo = RepoBuilder(repos_dir / f"org{r:02d}__proj{r:02d}")
        lines = [
            "package demo;",
            "",
            f"public class Widget{r} {{",
            "    static int limit = 10;",
            "    static boolean ready = false;",
            "",
            f"    int check{r}(int value) {{",
            "        if (value >= limit) {",
            "            return limit;",
            "        }",
            f"        return value + {r * 10};",
            "    }",
            "}",
        ]
        text = "\n".join(lines) + "\n"
        repo.commit("initial import", {"Widget.java": text})
        current = text
        for f in range(fixes_per_repo):
            old = f"return value + {r * 10 + f};"
            new = f"return value + {r * 10 + f + 1};"
            updated = current.replace(old, new)
            assert updated != current
            repo.commit(f"fix wrong offset case {f}", {"Widget.java": updated})
            current = updated
        # distractors: multi-line change, non-fix message, non-java file
        repo.commit("add docs", {"README.md": f"widget {r}\n"})
        multi = current.replace("static int limit = 10;", "static int limit = 12;").replace(
            "static boolean ready = false;", "static boolean ready = true;"
        )
        repo.commit("fix limits and readiness", {"Widget.java": multi})
        current = multi
    return repos_dir
