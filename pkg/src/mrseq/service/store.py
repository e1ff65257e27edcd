"""Embedded persistence: single-file sqlite plus content-addressed blobs.

Users, sessions, stored items and job records live in one sqlite database;
item payloads go to ``<data_dir>/blobs/<sha256>``.  All access is serialized
behind one lock (the service is read-mostly and simulations dominate).  With
``data_dir=None`` everything stays in memory, which the tests use.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import sqlite3
import threading
import time
import uuid
from pathlib import Path

__all__ = ["Store", "AuthError", "TOKEN_TTL"]

TOKEN_TTL = 24 * 3600.0  # seconds
_PBKDF2_ITERS = 50_000


class AuthError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def _hash_password(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, _PBKDF2_ITERS)


def _token_hash(token: str) -> str:
    return hashlib.sha256(token.encode("ascii")).hexdigest()


_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    id TEXT PRIMARY KEY,
    username TEXT UNIQUE NOT NULL,
    salt BLOB NOT NULL,
    pw_hash BLOB NOT NULL,
    role TEXT NOT NULL CHECK (role IN ('user', 'admin'))
);
CREATE TABLE IF NOT EXISTS sessions (
    token_hash TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(id),
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS items (
    id TEXT PRIMARY KEY,
    owner TEXT NOT NULL REFERENCES users(id),
    kind TEXT NOT NULL CHECK (kind IN ('sequence', 'result')),
    name TEXT NOT NULL,
    created_at REAL NOT NULL,
    blob_hash TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    id TEXT PRIMARY KEY,
    owner TEXT NOT NULL REFERENCES users(id),
    state TEXT NOT NULL,
    progress REAL NOT NULL,
    submitted_at REAL,
    started_at REAL,
    finished_at REAL,
    result_item TEXT,
    error TEXT
);
"""


class Store:
    def __init__(self, data_dir: str | os.PathLike | None):
        self._lock = threading.RLock()
        if data_dir is None:
            self._blob_dir = None
            self._blobs: dict[str, bytes] = {}
            self._db = sqlite3.connect(":memory:", check_same_thread=False)
        else:
            root = Path(data_dir)
            root.mkdir(parents=True, exist_ok=True)
            self._blob_dir = root / "blobs"
            self._blob_dir.mkdir(exist_ok=True)
            self._blobs = {}
            self._db = sqlite3.connect(str(root / "mrseq.sqlite3"), check_same_thread=False)
        self._db.executescript(_SCHEMA)
        self._db.commit()

    # -- blobs

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        with self._lock:
            if self._blob_dir is None:
                self._blobs[digest] = data
            else:
                path = self._blob_dir / digest
                if not path.exists():
                    path.write_bytes(data)
        return digest

    def get_blob(self, digest: str) -> bytes | None:
        with self._lock:
            if self._blob_dir is None:
                return self._blobs.get(digest)
            path = self._blob_dir / digest
            return path.read_bytes() if path.exists() else None

    # -- users

    def create_user(self, username: str, password: str, role: str = "user") -> dict:
        if role not in ("user", "admin"):
            raise ValueError(f"bad role {role!r}")
        if not username:
            raise ValueError("username must be non-empty")
        salt = secrets.token_bytes(16)
        row = (uuid.uuid4().hex, username, salt, _hash_password(password, salt), role)
        with self._lock:
            try:
                self._db.execute("INSERT INTO users VALUES (?,?,?,?,?)", row)
            except sqlite3.IntegrityError:
                raise ValueError(f"username {username!r} already exists") from None
            self._db.commit()
        return {"id": row[0], "username": username, "role": role}

    def get_user(self, user_id: str) -> dict | None:
        with self._lock:
            cur = self._db.execute(
                "SELECT id, username, role FROM users WHERE id = ?", (user_id,))
            row = cur.fetchone()
        return dict(zip(("id", "username", "role"), row)) if row else None

    def list_users(self) -> list[dict]:
        with self._lock:
            rows = self._db.execute(
                "SELECT id, username, role FROM users ORDER BY username").fetchall()
        return [dict(zip(("id", "username", "role"), r)) for r in rows]

    def n_users(self) -> int:
        with self._lock:
            return self._db.execute("SELECT COUNT(*) FROM users").fetchone()[0]

    def update_user(self, user_id: str, password: str | None = None,
                    role: str | None = None) -> dict | None:
        with self._lock:
            user = self.get_user(user_id)
            if user is None:
                return None
            if password is not None:
                salt = secrets.token_bytes(16)
                self._db.execute("UPDATE users SET salt = ?, pw_hash = ? WHERE id = ?",
                                 (salt, _hash_password(password, salt), user_id))
            if role is not None:
                if role not in ("user", "admin"):
                    raise ValueError(f"bad role {role!r}")
                self._db.execute("UPDATE users SET role = ? WHERE id = ?", (role, user_id))
            self._db.commit()
        return self.get_user(user_id)

    def delete_user(self, user_id: str) -> bool:
        """Remove a user, their sessions and all their stored items."""
        with self._lock:
            if self.get_user(user_id) is None:
                return False
            self._db.execute("DELETE FROM sessions WHERE user_id = ?", (user_id,))
            self._db.execute("DELETE FROM items WHERE owner = ?", (user_id,))
            self._db.execute("DELETE FROM jobs WHERE owner = ?", (user_id,))
            self._db.execute("DELETE FROM users WHERE id = ?", (user_id,))
            self._db.commit()
        return True

    # -- sessions

    def login(self, username: str, password: str) -> tuple[str, dict] | None:
        with self._lock:
            cur = self._db.execute(
                "SELECT id, salt, pw_hash, role FROM users WHERE username = ?", (username,))
            row = cur.fetchone()
            if row is None:
                return None
            user_id, salt, pw_hash, role = row
            if not secrets.compare_digest(_hash_password(password, salt), pw_hash):
                return None
            token = secrets.token_hex(32)
            self._db.execute("INSERT INTO sessions VALUES (?,?,?)",
                             (_token_hash(token), user_id, time.time() + TOKEN_TTL))
            self._db.commit()
        return token, {"id": user_id, "username": username, "role": role}

    def authenticate(self, token: str) -> dict:
        """Resolve a bearer token; raises AuthError with code INVALID_TOKEN / TOKEN_EXPIRED."""
        with self._lock:
            cur = self._db.execute(
                "SELECT user_id, expires_at FROM sessions WHERE token_hash = ?",
                (_token_hash(token),))
            row = cur.fetchone()
            if row is None:
                raise AuthError("INVALID_TOKEN", "unknown token")
            user_id, expires_at = row
            if time.time() > expires_at:
                self._db.execute("DELETE FROM sessions WHERE token_hash = ?",
                                 (_token_hash(token),))
                self._db.commit()
                raise AuthError("TOKEN_EXPIRED", "token expired")
            user = self.get_user(user_id)
            if user is None:
                raise AuthError("INVALID_TOKEN", "user no longer exists")
        return user

    def logout(self, token: str) -> None:
        with self._lock:
            self._db.execute("DELETE FROM sessions WHERE token_hash = ?", (_token_hash(token),))
            self._db.commit()

    def expire_token(self, token: str) -> None:
        """Force a token's expiry into the past (test hook)."""
        with self._lock:
            self._db.execute("UPDATE sessions SET expires_at = ? WHERE token_hash = ?",
                             (time.time() - 1.0, _token_hash(token)))
            self._db.commit()

    # -- items

    def create_item(self, owner: str, kind: str, name: str, payload: bytes) -> dict:
        digest = self.put_blob(payload)
        row = (uuid.uuid4().hex, owner, kind, name, time.time(), digest)
        with self._lock:
            self._db.execute("INSERT INTO items VALUES (?,?,?,?,?,?)", row)
            self._db.commit()
        return dict(zip(("id", "owner", "kind", "name", "created_at", "blob_hash"), row))

    def get_item(self, item_id: str) -> dict | None:
        with self._lock:
            row = self._db.execute(
                "SELECT id, owner, kind, name, created_at, blob_hash FROM items WHERE id = ?",
                (item_id,)).fetchone()
        if row is None:
            return None
        return dict(zip(("id", "owner", "kind", "name", "created_at", "blob_hash"), row))

    def list_items(self, kind: str, owner: str | None = None) -> list[dict]:
        """Items of a kind; all users' items when ``owner`` is None (admin view)."""
        q = "SELECT id, owner, kind, name, created_at FROM items WHERE kind = ?"
        args: list = [kind]
        if owner is not None:
            q += " AND owner = ?"
            args.append(owner)
        q += " ORDER BY created_at, id"
        with self._lock:
            rows = self._db.execute(q, args).fetchall()
        return [dict(zip(("id", "owner", "kind", "name", "created_at"), r)) for r in rows]

    def delete_item(self, item_id: str) -> bool:
        with self._lock:
            cur = self._db.execute("DELETE FROM items WHERE id = ?", (item_id,))
            self._db.commit()
        return cur.rowcount > 0

    # -- job records (in-memory Job objects are authoritative while running)

    def record_job(self, job: dict) -> None:
        with self._lock:
            self._db.execute(
                "INSERT OR REPLACE INTO jobs VALUES (?,?,?,?,?,?,?,?,?)",
                (job["id"], job["owner"], job["state"], job["progress"],
                 job.get("submitted_at"), job.get("started_at"), job.get("finished_at"),
                 job.get("result_item"), job.get("error")))
            self._db.commit()
