package toy.text;

public class Escaper {
    public static String escape(String text) {
        return Sanitizer.clean(text).replace("&", "&amp;");
    }
}
