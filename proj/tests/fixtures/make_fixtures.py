#!/usr/bin/env python3
"""Builds the committed test fixtures and their oracle listings.

Usage: make_fixtures.py <residue-binary> <output-dir>

Images are written with pyfatfs (FAT) and extbuild.py (ext). Expected
listings come from The Sleuth Kit (pytsk3); ext listings are cross-checked
against dissect.extfs and the script aborts on any disagreement. SQLite
fixtures are written and queried with Python's sqlite3 module.
"""

import hashlib
import json
import os
import random
import shutil
import sqlite3
import stat
import struct
import subprocess
import sys
import tempfile

import pytsk3
import pyfatfs.PyFat as PyFat
import pyfatfs.PyFatFS as PyFatFS
from dissect.extfs import ExtFS

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from extbuild import ExtImage  # noqa: E402

MiB = 1024 * 1024
RNG = random.Random(20180102)


def rand_bytes(n):
    return RNG.getrandbits(8 * n).to_bytes(n, "little") if n else b""


def block_pattern(n, tag):
    """Low-entropy content whose every 512-byte unit is distinct, so a
    misplaced block still changes the digest."""
    out = bytearray()
    i = 0
    while len(out) < n:
        out += ("%s block %08d " % (tag, i)).encode().ljust(512, b".")
        i += 1
    return bytes(out[:n])


def md5(b):
    return hashlib.md5(b).hexdigest()


# ---- oracle listings -----------------------------------------------------------

def tsk_listing(image, offset=0):
    fs = pytsk3.FS_Info(pytsk3.Img_Info(image), offset=offset)
    out = []

    def walk(d, parent):
        for ent in d:
            name = ent.info.name.name.decode("utf-8", "surrogateescape")
            if name in (".", "..") or name.startswith("$"):
                continue
            meta = ent.info.meta
            if meta is None or meta.type == pytsk3.TSK_FS_META_TYPE_VIRT:
                continue
            if "(Volume Label Entry)" in name:
                continue
            path = parent + "/" + name
            allocated = bool(int(ent.info.name.flags) & int(pytsk3.TSK_FS_NAME_FLAG_ALLOC))
            if meta.type == pytsk3.TSK_FS_META_TYPE_DIR:
                out.append({"path": path, "type": "dir", "allocated": allocated})
                if allocated:
                    walk(ent.as_directory(), path)
            elif meta.type == pytsk3.TSK_FS_META_TYPE_LNK:
                target = meta.link.decode() if meta.link else ent.read_random(0, meta.size).decode()
                out.append({"path": path, "type": "symlink", "size": meta.size, "target": target,
                            "allocated": allocated})
            else:
                rec = {"path": path, "type": "file", "size": meta.size, "allocated": allocated}
                try:
                    data = ent.read_random(0, meta.size) if meta.size else b""
                    if len(data) == meta.size:
                        rec["md5"] = md5(data)
                except OSError:
                    pass
                out.append(rec)

    walk(fs.open_dir("/"), "")
    return sorted(out, key=lambda r: (r["path"].encode(), r["allocated"]))


def dissect_listing(image, offset=0):
    with open(image, "rb") as fh:
        fh.seek(0)
        if offset:
            data = fh.read()
            import io
            fh = io.BytesIO(data[offset:])
        fs = ExtFS(fh)
        out = []

        def walk(ino, parent):
            for child in ino.iterdir():
                name = child.filename
                if name in (".", ".."):
                    continue
                path = parent + "/" + name
                if stat.S_ISDIR(child.filetype):
                    out.append({"path": path, "type": "dir", "allocated": True})
                    walk(child, path)
                elif stat.S_ISLNK(child.filetype):
                    out.append({"path": path, "type": "symlink", "size": child.size, "target": child.link,
                                "allocated": True})
                else:
                    out.append({"path": path, "type": "file", "size": child.size,
                                "md5": md5(child.open().read()), "allocated": True})

        walk(fs.root, "")
    return sorted(out, key=lambda r: (r["path"].encode(), r["allocated"]))


def ext_oracle(image, offset=0):
    a = tsk_listing(image, offset)
    b = dissect_listing(image, offset)
    if a != b:
        for x, y in zip(a, b):
            if x != y:
                print("oracle disagreement:", x, y, file=sys.stderr)
        raise SystemExit("TSK and dissect.extfs disagree on " + image)
    return a


def partition_oracle(image):
    vol = pytsk3.Volume_Info(pytsk3.Img_Info(image))
    out = []
    for part in vol:
        if not int(part.flags) & int(pytsk3.TSK_VS_PART_FLAG_ALLOC):
            continue
        desc = part.desc.decode()
        type_code = int(desc[desc.rindex("(0x") + 1:desc.rindex(")")], 16)
        out.append({"slot": part.slot_num, "start_lba": part.start, "sector_count": part.len,
                    "type_code": type_code, "description": desc})
    return out


# ---- FAT -----------------------------------------------------------------------

def make_fat(path, size, fat_type, files, label="BOOT"):
    with open(path, "wb") as f:
        f.truncate(size)
    pf = PyFat.PyFat()
    pf.mkfs(path, fat_type, size=size, label=label)
    pf.close()
    fs = PyFatFS.PyFatFS(path, utc=True)
    for p, data in files:
        d = os.path.dirname(p)
        if d != "/" and not fs.exists(d):
            fs.makedirs(d)
        if data is None:
            fs.makedir(p)
        else:
            fs.writebytes(p, data)
    fs.close()


def fat_delete(path, short_name):
    """Marks a root-directory entry deleted and frees its chain, as a
    file manager would."""
    with open(path, "r+b") as f:
        bpb = f.read(512)
        bps, spc = struct.unpack_from("<HB", bpb, 11)
        reserved, nfats, root_entries = struct.unpack_from("<HBH", bpb, 14)
        spf = struct.unpack_from("<H", bpb, 22)[0]
        fat_off = reserved * bps
        root_off = (reserved + nfats * spf) * bps
        f.seek(root_off)
        root = bytearray(f.read(root_entries * 32))
        target = short_name.ljust(11).encode()
        for i in range(0, len(root), 32):
            if root[i + 11] != 0x0F and root[i:i + 11] == target:
                first = struct.unpack_from("<H", root, i + 26)[0]
                root[i] = 0xE5
                j = i - 32
                while j >= 0 and root[j + 11] == 0x0F:
                    root[j] = 0xE5
                    j -= 32
                break
        else:
            raise SystemExit("no entry " + short_name)
        f.seek(root_off)
        f.write(root)
        f.seek(fat_off)
        fat = bytearray(f.read(spf * bps))
        c = first
        while 2 <= c < 0xFFF8:
            nxt = struct.unpack_from("<H", fat, c * 2)[0]
            struct.pack_into("<H", fat, c * 2, 0)
            c = nxt
        for k in range(nfats):
            f.seek(fat_off + k * spf * bps)
            f.write(fat)


# ---- ext -----------------------------------------------------------------------

def ext_from_tree(img, root):
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel = "/" + os.path.relpath(dirpath, root) if dirpath != root else ""
        for d in dirnames:
            full = os.path.join(dirpath, d)
            if os.path.islink(full):
                img.add_symlink(rel + "/" + d, os.readlink(full), int(os.lstat(full).st_mtime))
            else:
                img.mkdir(rel + "/" + d, int(os.lstat(full).st_mtime))
        for name in sorted(filenames):
            full = os.path.join(dirpath, name)
            st = os.lstat(full)
            if stat.S_ISLNK(st.st_mode):
                img.add_symlink(rel + "/" + name, os.readlink(full), int(st.st_mtime))
            else:
                with open(full, "rb") as fh:
                    img.add_file(rel + "/" + name, fh.read(), int(st.st_mtime))


def fat_files_from_tree(root):
    files = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel = "/" + os.path.relpath(dirpath, root) if dirpath != root else ""
        for d in dirnames:
            files.append((rel + "/" + d, None))
        for name in sorted(filenames):
            with open(os.path.join(dirpath, name), "rb") as fh:
                files.append((rel + "/" + name, fh.read()))
    return files


def write_mbr(image, parts, total_sectors, boot_code=False):
    mbr = bytearray(512)
    if boot_code:
        mbr[0:4] = b"\xfa\x31\xc0\x8e"
    if boot_code:
        mbr[440:444] = b"\x5a\x47\xd4\x0c"
    for i, (boot, type_code, start, count) in enumerate(parts):
        struct.pack_into("<B3sB3sII", mbr, 446 + 16 * i, 0x80 if boot else 0, b"\xfe\xff\xff", type_code,
                         b"\xfe\xff\xff", start, count)
    mbr[510:512] = b"\x55\xaa"
    with open(image, "r+b") as f:
        f.truncate(total_sectors * 512)
        f.write(mbr)


def splice(image, offset, part_image):
    with open(part_image, "rb") as src, open(image, "r+b") as dst:
        dst.seek(offset)
        shutil.copyfileobj(src, dst)


def octopi_image(out, name, boot_tree, rootfs_tree, tmp):
    """Octopi layout: 4 MiB gap, 60 MiB FAT16 at LBA 8192, Linux to the end."""
    image = os.path.join(out, name)
    total = 163840
    open(image, "wb").close()
    write_mbr(image, [(False, 0x0C, 8192, 122880), (False, 0x83, 131072, total - 131072)], total)
    fat = os.path.join(tmp, name + ".fat")
    make_fat(fat, 122880 * 512, PyFat.PyFat.FAT_TYPE_FAT16, fat_files_from_tree(boot_tree))
    ext = os.path.join(tmp, name + ".ext")
    img = ExtImage((total - 131072) * 512, block_size=4096, extents=True, is64=True, flex_bg=True,
                   inodes_per_group=1024)
    ext_from_tree(img, rootfs_tree)
    img.write(ext)
    splice(image, 8192 * 512, fat)
    splice(image, 131072 * 512, ext)
    return image


# ---- SQLite --------------------------------------------------------------------

URLS_SCHEMA = ("CREATE TABLE urls(id INTEGER PRIMARY KEY,url LONGVARCHAR,title LONGVARCHAR,"
               "visit_count INTEGER DEFAULT 0 NOT NULL,typed_count INTEGER DEFAULT 0 NOT NULL,"
               "last_visit_time INTEGER NOT NULL,hidden INTEGER DEFAULT 0 NOT NULL)")


def dump_rows(db, table):
    con = sqlite3.connect(db)
    con.text_factory = bytes
    cols = [r[1].decode() for r in con.execute("PRAGMA table_info(%s)" % table)]
    select = ", ".join("%s, typeof(%s)" % (c, c) for c in cols)
    rows = []
    for row in con.execute("SELECT rowid, %s FROM %s ORDER BY rowid" % (select, table)):
        vals = []
        for v, t in zip(row[1::2], row[2::2]):
            t = t.decode()
            if t == "null":
                vals.append({"type": t})
            elif t in ("integer", "real"):
                vals.append({"type": t, "value": v})
            else:
                vals.append({"type": t, "hex": bytes(v).hex()})
        rows.append({"rowid": row[0], "values": vals})
    con.close()
    return rows


def make_sqlite(out):
    expected = {}

    path = os.path.join(out, "history_urls.db")
    con = sqlite3.connect(path)
    con.execute(URLS_SCHEMA)
    con.execute("CREATE TABLE meta(key LONGVARCHAR NOT NULL UNIQUE PRIMARY KEY, value LONGVARCHAR)")
    con.execute("INSERT INTO meta VALUES('version','37')")
    rows = [
        (1, "http://octopi.local/", "OctoPrint", 1, 0, 13149647700000000, 0),
        (2, "octoprint/menu", "menu:print", 1, 0, 13159335847006000, 0),
        (3, "http://octopi.local/#files", "x" * 10240, 3, 1, 13159335900000000, 0),
        (7, "octoprint/menu", "menu:delete", 1, 0, 11644473600000000, 0),
        (8, "http://octopi.local/api?q=" + "é" * 40, None, 2, 0, 13159336000000000, 1),
    ]
    con.executemany("INSERT INTO urls VALUES(?,?,?,?,?,?,?)", rows)
    con.commit()
    con.close()
    expected["history_urls.db"] = {"urls": dump_rows(path, "urls"), "meta": dump_rows(path, "meta")}

    path = os.path.join(out, "empty_table.db")
    con = sqlite3.connect(path)
    con.execute(URLS_SCHEMA)
    con.commit()
    con.close()
    expected["empty_table.db"] = {"urls": []}

    path = os.path.join(out, "multipage.db")
    con = sqlite3.connect(path)
    con.execute("PRAGMA page_size=1024")
    con.execute("CREATE TABLE t(id INTEGER PRIMARY KEY, name TEXT, score REAL, payload BLOB, n INTEGER)")
    r = random.Random(7)
    for i in range(1, 1501):
        payload = bytes(r.getrandbits(8) for _ in range(r.choice([0, 10, 200, 1500])))
        con.execute("INSERT INTO t VALUES(?,?,?,?,?)",
                    (i * 3, "row-%d" % i, r.random() * 1000 - 500, payload, r.randint(-2 ** 62, 2 ** 62)))
    con.execute("DELETE FROM t WHERE id % 7 = 0")
    con.commit()
    con.close()
    expected["multipage.db"] = {"t": dump_rows(path, "t")}

    path = os.path.join(out, "wal_mode.db")
    con = sqlite3.connect(path)
    con.execute("PRAGMA journal_mode=WAL")
    con.execute(URLS_SCHEMA)
    con.execute("INSERT INTO urls VALUES(1,'http://octopi.local/','OctoPrint',1,0,13149647700000000,0)")
    con.commit()
    con.execute("PRAGMA wal_checkpoint(TRUNCATE)")
    con.close()
    for suffix in ("-wal", "-shm"):
        if os.path.exists(path + suffix):
            os.remove(path + suffix)
    expected["wal_mode.db"] = {"urls": dump_rows(path, "urls")}

    path = os.path.join(out, "utf16le.db")
    con = sqlite3.connect(path)
    con.execute("PRAGMA encoding='UTF-16le'")
    con.execute("CREATE TABLE urls(id INTEGER PRIMARY KEY, url TEXT, title TEXT)")
    con.execute("INSERT INTO urls VALUES(1,'http://octopi.local/','Ωmega')")
    con.commit()
    con.close()
    expected["utf16le.db"] = {"urls": dump_rows(path, "urls")}

    with open(os.path.join(out, "sqlite_expected.json"), "w") as f:
        json.dump(expected, f, indent=1, sort_keys=True)


# ---- main ----------------------------------------------------------------------

def main():
    residue, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    oracle = {}
    tmp = tempfile.mkdtemp()
    try:
        corpus = os.path.join(tmp, "seq4")
        subprocess.check_call([residue, "synth", "--seed", "0", "--sequence", "4", "-o", corpus])

        # FAT
        boot = fat_files_from_tree(os.path.join(corpus, "baseline", "boot"))
        boot.append(("/kernel7.img", block_pattern(1536 * 1024 + 77, "kernel7")))
        boot.append(("/overlays/pi3-disable-bt.dtbo", rand_bytes(3000)))
        boot.append(("/A Long Name With Spaces.txt", b"long names survive\n"))
        make_fat(os.path.join(out, "fat16_boot.img"), 24 * MiB, PyFat.PyFat.FAT_TYPE_FAT16, boot)

        deleted = [("/KEEP.TXT", b"kept\n"), ("/GONE.TXT", b"deleted content " * 300),
                   ("/logs/octoprint.log", b"2018-01-02 03:04:05,006 - x - INFO - y\n" * 50),
                   ("/removed-design.gcode", b"G1 X1 Y1 E0.1 F1800\n" * 400)]
        make_fat(os.path.join(out, "fat16_deleted.img"), 16 * MiB, PyFat.PyFat.FAT_TYPE_FAT16, deleted)
        fat_delete(os.path.join(out, "fat16_deleted.img"), "GONE    TXT")
        fat_delete(os.path.join(out, "fat16_deleted.img"), "REMOVED-GCO")

        make_fat(os.path.join(out, "fat16_empty.img"), 8 * MiB, PyFat.PyFat.FAT_TYPE_FAT16, [])
        make_fat(os.path.join(out, "fat12_small.img"), 1440 * 1024, PyFat.PyFat.FAT_TYPE_FAT12,
                 [("/README.TXT", b"fat12\n"), ("/sub/data.bin", rand_bytes(20000))])
        make_fat(os.path.join(out, "fat32.img"), 40 * MiB, PyFat.PyFat.FAT_TYPE_FAT32, [("/X.TXT", b"x")])
        for name in ("fat16_boot.img", "fat16_deleted.img", "fat16_empty.img", "fat12_small.img"):
            oracle[name] = {"offset": 0, "entries": tsk_listing(os.path.join(out, name))}

        # ext
        e = ExtImage(8 * MiB, block_size=1024, extents=False, blocks_per_group=2048, inodes_per_group=128,
                     label=b"ext2blk")
        e.add_file("/etc/hostname", b"octopi\n")
        e.add_file("/var/big.bin", block_pattern(1300 * 1024 + 5, "big"))
        e.add_file("/var/sparse.bin", rand_bytes(1024) + bytes(300 * 1024) + rand_bytes(10), holes=range(1, 301))
        e.add_file("/empty", b"")
        e.add_symlink("/etc/localtime", "/usr/share/zoneinfo/Etc/UTC")
        e.add_symlink("/slow-link", "/very/long/target/" + "d" * 80)
        e.add_hardlink("/etc/hostname.bak", "/etc/hostname")
        e.write(os.path.join(out, "ext2_blockmap.img"))

        e = ExtImage(32 * MiB, block_size=4096, extents=True, is64=True, blocks_per_group=4096,
                     inodes_per_group=512, label=b"ext4ext")
        e.add_file("/frag.bin", block_pattern(5 * MiB, "frag"), fragment=100)
        e.add_file("/sparse.bin", rand_bytes(4096) + bytes(MiB) + rand_bytes(10), holes=range(1, 257))
        e.add_file("/home/pi/.octoprint/uploads/Rectangular_Test_Token-770373878-2017-09-11T21-27-35.303Z.gcode",
                   b"G28\nG1 X10 Y10 F1800\n" * 100)
        e.add_file("/tail-hole.bin", rand_bytes(4096) + bytes(8192), holes=range(1, 3))
        e.add_symlink("/etc/localtime", "/usr/share/zoneinfo/Etc/UTC")
        e.add_hardlink("/frag-link.bin", "/frag.bin")
        for i in range(120):
            e.add_file("/many/file-%03d.txt" % i, ("entry %d\n" % i).encode())
        e.write(os.path.join(out, "ext4_extents.img"))

        e = ExtImage(4 * MiB, block_size=4096, extents=True, inodes_per_group=128, label=b"empty")
        e.write(os.path.join(out, "ext4_lostfound.img"))

        e = ExtImage(8 * MiB, block_size=4096, extents=True, inodes_per_group=128, label=b"journal")
        e.add_file("/etc/hostname", b"octopi\n")
        e.add_journal(64, needs_recovery=True)
        e.write(os.path.join(out, "ext4_journal.img"))

        e = ExtImage(4 * MiB, block_size=4096, extents=True, inodes_per_group=128)
        e.add_file("/x", b"x")
        e.extra_incompat = 0x8000  # inline_data
        e.write(os.path.join(out, "ext4_unsupported.img"))

        rootfs = ExtImage(16 * MiB, block_size=4096, extents=True, is64=True, flex_bg=True, inodes_per_group=1024)
        ext_from_tree(rootfs, os.path.join(corpus, "baseline", "rootfs"))
        rootfs.write(os.path.join(out, "ext4_octopi_rootfs.img"))

        for name in ("ext2_blockmap.img", "ext4_extents.img", "ext4_lostfound.img", "ext4_octopi_rootfs.img"):
            oracle[name] = {"offset": 0, "entries": ext_oracle(os.path.join(out, name))}

        # Octopi-layout images: baseline and the after state of sequence 4.
        for state in ("baseline", "after"):
            name = "octopi_%s.img" % state
            image = octopi_image(out, name, os.path.join(corpus, state, "boot"), os.path.join(corpus, state, "rootfs"),
                                 tmp)
            oracle[name] = {
                "partitions": partition_oracle(image),
                "volumes": {
                    "fat0": {"offset": 8192 * 512, "entries": tsk_listing(image, 8192 * 512)},
                    "ext1": {"offset": 131072 * 512, "entries": ext_oracle(image, 131072 * 512)},
                },
            }
        shutil.copy(os.path.join(corpus, "ground_truth.tsv"), os.path.join(out, "octopi_seq4_ground_truth.tsv"))
        shutil.copy(os.path.join(corpus, "alert.md5"), os.path.join(out, "octopi_alert.md5"))

        with open(os.path.join(out, "zeroed.img"), "wb") as f:
            f.write(bytes(MiB))

        make_sqlite(out)
        with open(os.path.join(out, "oracle.json"), "w") as f:
            json.dump(oracle, f, indent=1, sort_keys=True)
    finally:
        shutil.rmtree(tmp)


if __name__ == "__main__":
    main()
