package toy.zip;

public class Installer {
    public static String install(String bundle) {
        String archive = Archive.open(bundle);
        int entries = Archive.entryCount(archive);
        String written = Archive.extractTo(archive, "plugin.xml", "plugins");
        return written;
    }

    public static String describe(String bundle) {
        return "bundle " + bundle;
    }
}
