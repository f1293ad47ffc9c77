#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
harmolat 打包脚本
用于将命令行工具打包成单文件可执行程序
"""

import os
import shutil
import subprocess

from config import Config

SPEC_FILE = 'harmolat.spec'
EXE_NAME = Config.APP_NAME


def clean_build_dirs():
    """清理构建目录"""
    dirs_to_clean = ['build', 'dist', '__pycache__']
    for dir_name in dirs_to_clean:
        if os.path.exists(dir_name):
            shutil.rmtree(dir_name)
            print(f"已清理目录: {dir_name}")


def create_spec_file():
    """创建PyInstaller规格文件"""
    spec_content = f'''
# -*- mode: python ; coding: utf-8 -*-

block_cipher = None

a = Analysis(
    ['main.py'],
    pathex=[],
    binaries=[],
    datas=[],
    hiddenimports=[
        'numpy',
        'scipy',
        'scipy.linalg',
        'scipy.special',
        'networkx',
        'mpmath',
        'configparser'
    ],
    hookspath=[],
    hooksconfig={{}},
    runtime_hooks=[],
    excludes=['tkinter'],
    win_no_prefer_redirects=False,
    win_private_assemblies=False,
    cipher=block_cipher,
    noarchive=False,
)

pyz = PYZ(a.pure, a.zipped_data, cipher=block_cipher)

exe = EXE(
    pyz,
    a.scripts,
    a.binaries,
    a.zipfiles,
    a.datas,
    [],
    name='{EXE_NAME}',
    debug=False,
    bootloader_ignore_signals=False,
    strip=False,
    upx=True,
    upx_exclude=[],
    runtime_tmpdir=None,
    console=True,
    disable_windowed_traceback=False,
    argv_emulation=False,
    target_arch=None,
    codesign_identity=None,
    entitlements_file=None,
)
'''

    with open(SPEC_FILE, 'w', encoding='utf-8') as f:
        f.write(spec_content)
    print(f"已创建PyInstaller规格文件: {SPEC_FILE}")


def build_exe() -> bool:
    """构建可执行文件"""
    try:
        cmd = ['pyinstaller', '--clean', SPEC_FILE]
        print(f"执行命令: {' '.join(cmd)}")
        result = subprocess.run(cmd, capture_output=True, text=True, encoding='utf-8')
    except FileNotFoundError:
        print("❌ 错误: 未找到pyinstaller命令")
        print("请先安装pyinstaller: pip install pyinstaller")
        return False

    if result.returncode == 0:
        print("\n✅ 构建成功!")
        print(f"可执行文件位置: {os.path.abspath(os.path.join('dist', EXE_NAME))}")
    else:
        print("\n❌ 构建失败!")
        print("错误输出:")
        print(result.stderr)
    return result.returncode == 0


def smoke_test() -> bool:
    """运行打包结果的 example 1 作为冒烟测试"""
    executable = os.path.join('dist', EXE_NAME + ('.exe' if os.name == 'nt' else ''))
    if not os.path.exists(executable):
        print("❌ 未找到可执行文件，请先构建")
        return False
    result = subprocess.run([executable, 'example', '1'], capture_output=True, text=True, encoding='utf-8')
    print(f"冒烟测试退出码: {result.returncode}")
    return result.returncode == 0


def main():
    """主函数"""
    print("=" * 50)
    print(f"{Config.APP_NAME} 打包脚本")
    print("=" * 50)

    if not os.path.exists('main.py'):
        print("❌ 错误: 未找到main.py文件，请在项目根目录运行此脚本")
        return

    print("\n1. 清理构建目录...")
    clean_build_dirs()

    print("\n2. 创建PyInstaller规格文件...")
    create_spec_file()

    print("\n3. 开始构建可执行文件...")
    if build_exe():
        print("\n4. 冒烟测试...")
        if smoke_test():
            print("\n🎉 打包完成！")
        else:
            print("\n❌ 冒烟测试失败")
    else:
        print("\n❌ 打包失败，请检查错误信息")


if __name__ == '__main__':
    main()
