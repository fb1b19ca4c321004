"""ミニ C 言語のフロントエンド（構文解析・型検査・簡約）。"""
